"""
Testes do modelo de Newell estocástico: velocidade de equilíbrio,
espaçamento desejado por tipo de veículo e atualização da velocidade.
"""

import unittest
import os
import sys

import numpy as np

# Adiciona o diretório src ao path para importar os módulos
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from services.errors import ConfigurationError
from services.newell_model import (
    ModelParams,
    SpacingContext,
    VehicleKind,
    desired_spacing,
    equilibrium_speed,
    next_speed,
    next_speeds,
    noise_amplitude,
)


class TestModelParams(unittest.TestCase):
    """Validação dos parâmetros do diagrama fundamental."""

    def test_defaults(self):
        params = ModelParams()
        self.assertEqual((params.u0, params.s_j, params.tau, params.sigma_hat), (25.0, 7.5, 1.5, 0.25))
        self.assertAlmostEqual(params.free_flow_spacing, 45.0)

    def test_invalid_values(self):
        for kwargs in ({"u0": 0}, {"s_j": -1}, {"tau": 0}, {"sigma_hat": -0.1}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigurationError):
                    ModelParams(**kwargs)

    def test_with_sigma(self):
        params = ModelParams().with_sigma(0.0)
        self.assertEqual(params.sigma_hat, 0.0)
        self.assertEqual(params.u0, 25.0)


class TestVehicleKind(unittest.TestCase):

    def test_noise_flags(self):
        noisy = {k for k in VehicleKind if k.noisy}
        self.assertEqual(noisy, {VehicleKind.HV, VehicleKind.PCV, VehicleKind.FCV})

    def test_parse(self):
        self.assertIs(VehicleKind.parse("mav"), VehicleKind.MAV)
        self.assertIs(VehicleKind.parse(" FCAV "), VehicleKind.FCAV)
        with self.assertRaises(ConfigurationError):
            VehicleKind.parse("BUS")

    def test_noise_amplitude(self):
        params = ModelParams()
        self.assertEqual(noise_amplitude(VehicleKind.PCV, params), 0.25)
        self.assertEqual(noise_amplitude(VehicleKind.PCAV, params), 0.0)


class TestEquilibriumSpeed(unittest.TestCase):

    def setUp(self):
        self.params = ModelParams()

    def test_reference_values(self):
        self.assertAlmostEqual(equilibrium_speed(22.0, self.params), 9.6667, places=4)
        self.assertEqual(equilibrium_speed(7.5, self.params), 0.0)
        self.assertEqual(equilibrium_speed(100.0, self.params), 25.0)

    def test_below_jam_spacing_is_negative(self):
        self.assertLess(equilibrium_speed(6.0, self.params), 0.0)

    def test_monotone_and_affine(self):
        spacings = np.linspace(0.0, 80.0, 401)
        speeds = equilibrium_speed(spacings, self.params)
        self.assertTrue(np.all(np.diff(speeds) >= 0))
        inner = (spacings > 7.5) & (spacings < 45.0)
        slopes = np.diff(speeds[inner]) / np.diff(spacings[inner])
        np.testing.assert_allclose(slopes, 1 / 1.5)


class TestDesiredSpacing(unittest.TestCase):

    def test_rules_by_kind(self):
        self.assertEqual(desired_spacing(VehicleKind.HV, SpacingContext(own_spacing=13.7)), 13.7)
        self.assertEqual(desired_spacing(VehicleKind.MAV, SpacingContext(own_spacing=20, leader_spacing=30)), 25)
        self.assertEqual(
            desired_spacing(VehicleKind.PCAV, SpacingContext(own_spacing=18, connected_spacings=(18, 22, 26))), 22
        )
        self.assertEqual(desired_spacing(VehicleKind.FCAV, SpacingContext(own_spacing=10, mean_spacing=25)), 25)

    def test_missing_fields_identify_vehicle(self):
        cases = [
            (VehicleKind.MAV, SpacingContext(own_spacing=20, vehicle=7)),
            (VehicleKind.PCV, SpacingContext(own_spacing=20, vehicle=7)),
            (VehicleKind.FCV, SpacingContext(own_spacing=20, vehicle=7)),
        ]
        for kind, ctx in cases:
            with self.subTest(kind=kind):
                with self.assertRaises(ConfigurationError) as cm:
                    desired_spacing(kind, ctx)
                self.assertIn("veículo 7", str(cm.exception))

    def test_invalid_context(self):
        with self.assertRaises(ConfigurationError):
            SpacingContext(own_spacing=-1.0)
        with self.assertRaises(ConfigurationError):
            SpacingContext(own_spacing=1.0, mean_spacing=0.0)


class TestNextSpeed(unittest.TestCase):

    def setUp(self):
        self.params = ModelParams()
        self.ctx22 = SpacingContext(own_spacing=22.0)

    def test_reference_values(self):
        self.assertAlmostEqual(next_speed(VehicleKind.HV, self.ctx22, self.params, 0.0), 9.6667, places=4)
        self.assertAlmostEqual(next_speed(VehicleKind.HV, self.ctx22, self.params, 1.0), 9.9167, places=4)
        self.assertAlmostEqual(next_speed(VehicleKind.AV, self.ctx22, self.params, 1.0), 9.6667, places=4)
        self.assertEqual(next_speed(VehicleKind.HV, SpacingContext(own_spacing=7.5), self.params, -1.0), 0.0)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        for spacing, z in zip(rng.uniform(0, 120, 200), rng.normal(0, 50, 200)):
            v = next_speed(VehicleKind.HV, SpacingContext(own_spacing=spacing), self.params, z)
            self.assertGreaterEqual(v, 0.0)
            self.assertLessEqual(v, 25.0)

    def test_noiseless_kinds_ignore_noise(self):
        ctx = SpacingContext(own_spacing=21.0, leader_spacing=24.0,
                             connected_spacings=(21.0, 30.0), mean_spacing=23.0)
        draws = np.random.default_rng(0).standard_normal(100)
        for kind in (VehicleKind.AV, VehicleKind.MAV, VehicleKind.PCAV, VehicleKind.FCAV):
            speeds = {next_speed(kind, ctx, self.params, z) for z in draws}
            self.assertEqual(len(speeds), 1, kind)

    def test_single_connected_pcav_equals_av(self):
        for spacing in (8.0, 15.3, 22.0, 44.9, 60.0):
            pcav = next_speed(VehicleKind.PCAV, SpacingContext(own_spacing=spacing, connected_spacings=(spacing,)),
                              self.params, 0.7)
            av = next_speed(VehicleKind.AV, SpacingContext(own_spacing=spacing), self.params, 0.7)
            self.assertEqual(pcav, av)

    def test_pcv_and_pcav_match_without_noise(self):
        ctx = SpacingContext(own_spacing=20.0, connected_spacings=(20.0, 26.0, 31.0))
        self.assertEqual(next_speed(VehicleKind.PCV, ctx, self.params, 0.0),
                         next_speed(VehicleKind.PCAV, ctx, self.params, 0.0))

    def test_vectorized_matches_scalar(self):
        desired = np.array([7.5, 22.0, 50.0, 10.0])
        sigma = np.array([0.25, 0.0, 0.25, 0.25])
        noise = np.array([-1.0, 1.0, 0.5, 2.0])
        vector = next_speeds(desired, sigma, self.params, noise)
        kinds = [VehicleKind.HV, VehicleKind.AV, VehicleKind.HV, VehicleKind.HV]
        scalar = [next_speed(k, SpacingContext(own_spacing=s), self.params, z)
                  for k, s, z in zip(kinds, desired, noise)]
        np.testing.assert_array_equal(vector, scalar)


if __name__ == '__main__':
    unittest.main()
