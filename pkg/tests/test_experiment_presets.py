"""
Testes dos presets embutidos e da leitura dos arquivos de experimento.
"""

import unittest
import tempfile
import shutil
import json
import os
import sys

# Adiciona o diretório src ao path para importar os módulos
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from services.errors import ConfigurationError, UnknownPresetError
from services.experiment_presets import (
    PRESETS,
    ExperimentConfig,
    build_experiment,
    get_preset,
    load_config_file,
)
from services.scenario import OpenRoad, Ring


class TestPresets(unittest.TestCase):

    def test_all_presets_are_valid(self):
        expected = {"fig1", "fig2", "fig3b", "fig4", "fig5", "fig6-mpr1", "fig6-mpr2", "fig6-mpr5", "fig6-mpr10"}
        self.assertEqual(set(PRESETS), expected)
        for name, config in PRESETS.items():
            with self.subTest(preset=name):
                config.model_params()
                self.assertIsInstance(config.geometry_obj(), (OpenRoad, Ring))

    def test_reference_values(self):
        fig1 = get_preset("fig1")
        self.assertEqual((fig1.n_vehicles, fig1.initial_spacing, fig1.kinds), (100, 22.0, ("HV",)))
        fig6 = get_preset("fig6-mpr10")
        self.assertEqual(fig6.geometry_obj(), Ring(6000.0))
        self.assertEqual(fig6.mprs, (0.1,))
        self.assertEqual(fig6.tail_points, 200)
        self.assertEqual(get_preset("fig4").n_vehicles, 200)

    def test_unknown_preset(self):
        with self.assertRaises(UnknownPresetError) as cm:
            get_preset("fig9")
        self.assertIn("fig1", str(cm.exception))

    def test_invalid_config(self):
        with self.assertRaises(ConfigurationError):
            ExperimentConfig(geometry="ring")
        with self.assertRaises(ConfigurationError):
            ExperimentConfig(kinds=("HV", "ZZ"))
        with self.assertRaises(ConfigurationError):
            ExperimentConfig(runs=0)


class TestConfigFile(unittest.TestCase):

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _write(self, content, name="exp.json"):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            if isinstance(content, str):
                f.write(content)
            else:
                json.dump(content, f)
        return path

    def test_sections(self):
        path = self._write({
            "preset": "fig3b",
            "model": {"sigma_hat": 0.3},
            "scenario": {"n_vehicles": 50, "kinds": ["MAV"]},
            "ensemble": {"runs": 10, "mprs": [0.02, 0.04]},
            "output": {"dir": "out/fig3b"},
        })
        cfg = load_config_file(path)
        self.assertEqual(cfg.preset, "fig3b")
        self.assertEqual(cfg.output_dir, "out/fig3b")
        config, out_dir = build_experiment(config_path=path)
        self.assertEqual(config.name, "fig3b")
        self.assertEqual(config.sigma_hat, 0.3)
        self.assertEqual(config.kinds, ("MAV",))
        self.assertEqual(config.mprs, (0.02, 0.04))
        self.assertEqual(config.runs, 10)
        self.assertEqual(config.steps, 1000)
        self.assertEqual(out_dir, "out/fig3b")

    def test_precedence(self):
        path = self._write({"ensemble": {"runs": 10, "seed": 3}})
        config, _ = build_experiment("fig4", path, {"runs": 2, "kinds": "FCAV", "seed": None})
        self.assertEqual(config.runs, 2)
        self.assertEqual(config.seed, 3)
        self.assertEqual(config.kinds, ("FCAV",))
        self.assertEqual(config.n_vehicles, 200)

    def test_switching_to_ring_drops_open_road_spacing(self):
        path = self._write({"scenario": {"geometry": "ring", "ring_length": 1000.0, "n_vehicles": 40}})
        config, _ = build_experiment(config_path=path)
        self.assertIsNone(config.initial_spacing)
        self.assertEqual(config.geometry_obj(), Ring(1000.0))

    def test_unknown_keys_and_sections(self):
        for content in ({"model": {"speed": 1}}, {"extras": {}}, {"model": 3}, "[1, 2]", "{not json"):
            with self.subTest(content=content):
                path = self._write(content)
                with self.assertRaises(ConfigurationError):
                    build_experiment(config_path=path)

    def test_example_file_loads(self):
        example = os.path.join(os.path.dirname(__file__), '..', 'config', 'experiment_example.json')
        config, out_dir = build_experiment(config_path=example)
        self.assertEqual(config.kinds, ("MAV", "FCAV"))
        self.assertEqual(out_dir, "output/example")


if __name__ == '__main__':
    unittest.main()
