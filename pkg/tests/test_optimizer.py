import math
import unittest
from pathlib import Path

from src.core.exceptions import InfeasibleEverywhere, InvalidParameters
from src.core.keyrate import KeyRateReport
from src.core.params import SecurityParams
from src.detection.detector import ChannelSpec
from src.formats.records import load
from src.optimization.optimizer import (
    KeyRateObjective,
    ParamBounds,
    coarse_grid,
    coordinate_descent,
    optimize_params,
    reference_points,
)

DATA_DIR = Path(__file__).resolve().parents[1] / 'data'

PEAK = {'mu_x': 0.01, 'mu_y': 0.44, 'p_x': 0.2, 'p_y': 0.6, 'eps_send': 0.25}


class PeakObjective(KeyRateObjective):
    """Smooth single-peaked stand-in for the simulated key rate."""

    def __init__(self, scale=1e-5):
        super().__init__(ChannelSpec(loss_i_db=0.0, loss_j_db=0.0), 1e10, SecurityParams())
        self.scale = scale

    def report(self, params):
        key = self.key(params)
        if key not in self._cache:
            distance = (math.log(params.mu_x / PEAK['mu_x']) ** 2
                        + sum(((getattr(params, name) - PEAK[name]) / 0.2) ** 2
                              for name in ('mu_y', 'p_x', 'p_y', 'eps_send')))
            rate = self.scale * math.exp(-distance)
            self._cache[key] = KeyRateReport(rate_per_pulse=rate, rate_bps=0.0, feasible=rate > 0)
        return self._cache[key]


class TestParamBounds(unittest.TestCase):

    def test_unit_mapping(self):
        bounds = ParamBounds()
        for name, value in PEAK.items():
            self.assertAlmostEqual(bounds.from_unit(name, bounds.to_unit(name, value)), value)

    def test_log_axis(self):
        axis = ParamBounds(grid_points=3).axis('mu_x')
        self.assertAlmostEqual(axis[1], math.sqrt(0.002 * 0.1))

    def test_invalid_boxes(self):
        with self.assertRaises(InvalidParameters):
            ParamBounds(mu_x=(0.0, 0.1))
        with self.assertRaises(InvalidParameters):
            ParamBounds(mu_x=(0.01, 0.3), mu_y=(0.2, 0.8))
        with self.assertRaises(InvalidParameters):
            ParamBounds(grid_points=1)


class TestSearch(unittest.TestCase):

    def setUp(self):
        self.bounds = ParamBounds(tolerance=1e-6, min_step=1e-3)

    def test_grid_is_ranked(self):
        ranked = coarse_grid(PeakObjective(), self.bounds)
        rates = [rate for rate, _ in ranked]
        self.assertEqual(rates, sorted(rates, reverse=True))
        # Points violating p_x + p_y <= 1 - p_o_min are skipped
        self.assertTrue(all(p.p_x + p.p_y <= 0.99 + 1e-9 for _, p in ranked))

    def test_descent_improves(self):
        objective = PeakObjective()
        start_rate, start = coarse_grid(objective, self.bounds)[0]
        rate, best = coordinate_descent(objective, self.bounds, start)
        self.assertGreaterEqual(rate, start_rate)

    def test_finds_the_peak(self):
        result = optimize_params(None, 1e10, SecurityParams(), bounds=self.bounds,
                                 objective=PeakObjective())
        self.assertAlmostEqual(result.best.mu_y, PEAK['mu_y'], delta=0.02)
        self.assertAlmostEqual(result.best.eps_send, PEAK['eps_send'], delta=0.02)
        self.assertAlmostEqual(result.best.p_x, PEAK['p_x'], delta=0.02)
        self.assertLess(abs(math.log(result.best.mu_x / PEAK['mu_x'])), 0.1)
        self.assertGreater(result.report.rate_per_pulse, 0.99e-5)

    def test_infeasible_everywhere(self):
        with self.assertRaises(InfeasibleEverywhere):
            optimize_params(None, 1e10, SecurityParams(), bounds=self.bounds,
                            objective=PeakObjective(scale=0.0))

    def test_deterministic(self):
        first = optimize_params(None, 1e10, SecurityParams(), bounds=self.bounds, seed=3,
                                objective=PeakObjective())
        second = optimize_params(None, 1e10, SecurityParams(), bounds=self.bounds, seed=3,
                                 objective=PeakObjective())
        self.assertEqual(first.best, second.best)


class TestSimulatedOptimum(unittest.TestCase):

    def test_never_worse_than_published_point(self):
        ch = ChannelSpec(loss_i_db=20.0, loss_j_db=20.0, visibility=0.9672)
        sec = SecurityParams()
        start = load('params', DATA_DIR / 'table1_20db.json').with_values(mu_o=0.0)
        objective = KeyRateObjective(ch, 1e10, sec, aopp_sample_size=50000)
        bounds = ParamBounds(grid_points=2, min_step=0.1)
        result = optimize_params(ch, 1e10, sec, bounds=bounds, start=start, objective=objective)
        self.assertGreaterEqual(result.report.rate_per_pulse, objective(start))
        self.assertGreater(result.report.rate_per_pulse, 0.0)

    def test_recorded_points_are_candidates_without_a_start(self):
        ch = ChannelSpec(loss_i_db=30.0, loss_j_db=30.0, visibility=0.9672)
        sec = SecurityParams()
        recorded = load('params', DATA_DIR / 'table1_30db.json').with_values(mu_o=0.0)
        objective = KeyRateObjective(ch, 1e10, sec, aopp_sample_size=50000)
        bounds = ParamBounds(grid_points=2, min_step=0.1)
        self.assertGreater(objective(recorded), 0.0)
        result = optimize_params(ch, 1e10, sec, bounds=bounds, objective=objective)
        self.assertGreaterEqual(result.report.rate_per_pulse, objective(recorded))
        self.assertIn(recorded, reference_points(bounds))


if __name__ == '__main__':
    unittest.main()
