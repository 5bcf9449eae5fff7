"""
Testes das métricas de oscilação: desvio-padrão por veículo e ao longo
do tempo, redução percentual, expoente de crescimento e média da cauda.
"""

import unittest
import os
import sys

import numpy as np

# Adiciona o diretório src ao path para importar os módulos
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from services.errors import MetricError
from services.newell_model import ModelParams, VehicleKind
from services.oscillation_metrics import (
    MeasurementWindow,
    default_window,
    growth_exponent,
    over_time_std,
    per_vehicle_std,
    reduction_pct,
    tail_mean,
)
from services.scenario import FleetConfig, Ring, RunRecord, run


def _record(speeds, dt=1.5):
    speeds = np.asarray(speeds, dtype=float)
    return RunRecord(dt=dt, speeds=speeds, positions=np.cumsum(speeds, axis=0) * dt,
                     kinds=(VehicleKind.HV,) * speeds.shape[1])


class TestPerVehicleStd(unittest.TestCase):

    def test_hand_computed(self):
        record = _record([[1.0], [2.0], [3.0]])
        curve = per_vehicle_std(record, MeasurementWindow(0.0))
        self.assertAlmostEqual(curve.values[0], 1.0)
        np.testing.assert_array_equal(curve.indices, [1])

    def test_constant_speeds(self):
        record = _record(np.full((20, 4), 9.0))
        curve = per_vehicle_std(record, MeasurementWindow(0.0, 15.0))
        np.testing.assert_array_equal(curve.values, np.zeros(4))

    def test_default_window_skips_warm_up(self):
        record = _record(np.zeros((100, 10)))
        window = default_window(record)
        self.assertEqual(window.t_start, 15.0)
        self.assertAlmostEqual(window.t_end, 99 * 1.5)

    def test_window_too_short(self):
        record = _record(np.zeros((10, 3)))
        with self.assertRaises(MetricError):
            per_vehicle_std(record, MeasurementWindow(3.0, 3.0))
        with self.assertRaises(MetricError):
            per_vehicle_std(record, MeasurementWindow(0.0, 100.0))
        # N·τ = 4.5 s e o registro termina em 13.5 s: janela padrão válida
        self.assertEqual(len(per_vehicle_std(record).values), 3)

    def test_invariant_under_time_relabeling(self):
        rng = np.random.default_rng(2)
        speeds = rng.uniform(0, 25, (50, 5))
        window = MeasurementWindow(0.0)
        a = per_vehicle_std(_record(speeds), window).values
        b = per_vehicle_std(_record(speeds[rng.permutation(50)]), window).values
        np.testing.assert_allclose(a, b, rtol=1e-12)

    def test_noiseless_equilibrium_run_is_zero(self):
        params = ModelParams(sigma_hat=0.0)
        record = run(Ring(2500.0), FleetConfig.homogeneous(100), params, seed=0, n_steps=300)
        np.testing.assert_allclose(per_vehicle_std(record).values, 0.0, atol=1e-12)


class TestOverTimeStd(unittest.TestCase):

    def test_hand_computed(self):
        curve = over_time_std(_record([[10.0, 12.0, 14.0]]))
        self.assertAlmostEqual(curve.values[0], 2.0)

    def test_requires_two_vehicles(self):
        with self.assertRaises(MetricError):
            over_time_std(_record([[1.0], [2.0]]))

    def test_first_sample_is_zero(self):
        record = run(Ring(2500.0), FleetConfig.homogeneous(100), ModelParams(), seed=1, n_steps=50)
        curve = over_time_std(record)
        self.assertEqual(len(curve.values), 50)
        self.assertAlmostEqual(curve.values[0], 0.0, places=12)
        self.assertAlmostEqual(curve.times[-1], 49 * 1.5)

    def test_scaling(self):
        speeds = np.random.default_rng(0).uniform(0, 20, (30, 8))
        base = over_time_std(_record(speeds)).values
        scaled = over_time_std(_record(0.5 * speeds)).values
        np.testing.assert_allclose(scaled, 0.5 * base, rtol=1e-12)

    def test_invariant_under_vehicle_relabeling(self):
        rng = np.random.default_rng(5)
        speeds = rng.uniform(0, 25, (40, 12))
        base = over_time_std(_record(speeds)).values
        shuffled = over_time_std(_record(speeds[:, rng.permutation(12)])).values
        np.testing.assert_allclose(shuffled, base, rtol=1e-12)


class TestReductionAndFit(unittest.TestCase):

    def test_reduction(self):
        self.assertAlmostEqual(reduction_pct(4.0, 3.0), 25.0)
        self.assertEqual(reduction_pct(4.0, 4.0), 0.0)
        with self.assertRaises(MetricError):
            reduction_pct(0.0, 1.0)

    def test_growth_exponent_power_law(self):
        n = np.arange(1, 101)
        self.assertAlmostEqual(growth_exponent(0.3 * np.sqrt(n)), 0.5, delta=1e-6)
        self.assertAlmostEqual(growth_exponent(np.full(100, 2.0)), 0.0, delta=1e-9)

    def test_growth_exponent_scale_invariant(self):
        values = np.random.default_rng(4).uniform(0.5, 3.0, 60)
        self.assertAlmostEqual(growth_exponent(values), growth_exponent(7.0 * values), places=9)

    def test_growth_exponent_errors(self):
        values = np.linspace(1.0, 2.0, 50)
        values[20] = 0.0
        with self.assertRaises(MetricError):
            growth_exponent(values)
        with self.assertRaises(MetricError):
            growth_exponent(np.ones(12))
        with self.assertRaises(MetricError):
            growth_exponent(np.ones(50), fit_range=(40, 60))

    def test_tail_mean(self):
        self.assertEqual(tail_mean([1.0, 2.0, 3.0, 5.0], 2), 4.0)
        self.assertEqual(tail_mean([1.0, 2.0, 3.0]), 3.0)
        with self.assertRaises(MetricError):
            tail_mean([1.0], 2)


if __name__ == '__main__':
    unittest.main()
