"""
Testes do logger estruturado de erros e desempenho.
"""

import unittest
import tempfile
import shutil
import json
import os
import sys

# Adiciona o diretório src ao path para importar os módulos
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from services.errors import (
    CollisionError,
    ConfigurationError,
    EnsembleCollisionError,
    MetricError,
    ResultsFormatError,
    UnknownPresetError,
)
from services.structured_error_logger import StructuredErrorLogger


class TestStructuredErrorLogger(unittest.TestCase):
    """Testa a classe StructuredErrorLogger."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.logger = StructuredErrorLogger(name=f"test_{id(self)}", log_dir=self.temp_dir)

    def tearDown(self):
        self.logger.close()
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _lines(self, name):
        with open(os.path.join(self.temp_dir, name), encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]

    def test_error_categorization(self):
        cases = [
            (CollisionError("colisão", 3, 7, -0.1), "collision"),
            (EnsembleCollisionError([("FCV 1%", CollisionError("colisão", 3, 7, -0.1))]), "collision"),
            (ConfigurationError("x"), "configuration"),
            (UnknownPresetError("x"), "configuration"),
            (MetricError("x"), "metric"),
            (ResultsFormatError("x"), "io"),
            (FileNotFoundError("x"), "io"),
            (RuntimeError("x"), "unknown"),
        ]
        for error, category in cases:
            with self.subTest(error=type(error).__name__):
                self.assertEqual(self.logger.categorize_error(error), category)

    def test_log_error_with_context(self):
        error = CollisionError("colisão detectada", 12, 40, -0.3).with_seed(99)
        with self.logger.error_context(command="mcs", preset="fig3b"):
            error_hash = self.logger.log_error(error, {"label": "FCAV 1%"})
        entry = self._lines("structured_errors.jsonl")[0]
        self.assertEqual(entry["error_hash"], error_hash)
        self.assertEqual(entry["error_category"], "collision")
        self.assertEqual(entry["command"], "mcs")
        self.assertEqual(entry["preset"], "fig3b")
        self.assertEqual(entry["seed"], 99)
        self.assertEqual(entry["vehicle"], 40)
        self.assertEqual(entry["label"], "FCAV 1%")
        self.assertEqual(self.logger.current_context, {})
        with open(os.path.join(self.temp_dir, "errors.log"), encoding="utf-8") as f:
            self.assertIn(error_hash, f.read())

    def test_skipped_ensembles_are_listed(self):
        error = EnsembleCollisionError([
            ("PCV 5%", CollisionError("colisão", 332, 19, -3.9, seed=11)),
            ("FCV 5%", CollisionError("colisão", 80, 2, -0.4, seed=12)),
        ])
        self.assertIn("2 ensemble(s)", str(error))
        self.assertIn("FCV 5% [seed 12]", str(error))
        self.logger.log_error(error)
        entry = self._lines("structured_errors.jsonl")[0]
        self.assertEqual(entry["error_category"], "collision")
        self.assertEqual([c["label"] for c in entry["collided"]], ["PCV 5%", "FCV 5%"])
        self.assertEqual(entry["collided"][0]["seed"], 11)

    def test_error_hash_is_stable(self):
        a = StructuredErrorLogger.error_hash(ConfigurationError("anel inviável"))
        b = StructuredErrorLogger.error_hash(ConfigurationError("anel inviável"))
        c = StructuredErrorLogger.error_hash(MetricError("anel inviável"))
        self.assertEqual(a, b)
        self.assertNotEqual(a, c)

    def test_performance_metric(self):
        with self.logger.error_context(command="compare"):
            self.logger.log_performance_metric("ensemble_duration", 1.25, context={"n_runs": 10})
        entry = self._lines("performance.jsonl")[0]
        self.assertEqual(entry["metric_name"], "ensemble_duration")
        self.assertEqual(entry["value"], 1.25)
        self.assertEqual(entry["unit"], "seconds")
        self.assertEqual(entry["command"], "compare")
        self.assertEqual(entry["n_runs"], 10)

    def test_collision_error_survives_pickle(self):
        import pickle
        error = CollisionError("colisão", 5, 2, -1.0, seed=17)
        restored = pickle.loads(pickle.dumps(error))
        self.assertEqual((restored.step, restored.vehicle, restored.seed), (5, 2, 17))
        self.assertIn("seed 17", str(restored))


if __name__ == '__main__':
    unittest.main()
