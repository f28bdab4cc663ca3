import unittest
from pathlib import Path
from unittest.mock import patch

from src.core.exceptions import ConstraintViolation, InvalidParameters, QNetException
from src.core.keyrate import KeyRateReport, bits_per_second
from src.core.params import SecurityParams
from src.detection.detector import ChannelSpec
from src.formats.records import load
from src.network.capacity import (
    PUBLISHED_CAPACITY,
    MuInventory,
    MuSpec,
    capacity_breakdown,
    check_ports,
    max_pairs_bruteforce,
    mu_capacity,
    ports_used,
    total_capacity,
    whatif_inventories,
)
from src.network.rate import (
    active_user_sweep,
    all_pairs,
    mu_path_loss_db,
    network_rate,
    symmetric_channels,
)
from src.network.scheduler import (
    PairingPlan,
    max_degree_subgraph,
    normalize_requests,
    schedule,
    validate_plan,
)

DATA_DIR = Path(__file__).resolve().parents[1] / 'data'


def fixed_report(rate):
    return KeyRateReport(rate_per_pulse=rate, rate_bps=bits_per_second(rate), feasible=rate > 0)


class TestCapacity(unittest.TestCase):

    def test_formula_matches_exhaustive_search(self):
        for n in range(2, 10):
            for i in range(1, n):
                with self.subTest(n=n, i=i):
                    spec = MuSpec(n, i)
                    self.assertEqual(mu_capacity(spec), max_pairs_bruteforce(spec))

    def test_known_units(self):
        self.assertEqual(mu_capacity(MuSpec(2, 1)), 1)
        self.assertEqual(mu_capacity(MuSpec(3, 2)), 3)
        self.assertEqual(mu_capacity(MuSpec(4, 3)), 6)
        self.assertEqual(mu_capacity(MuSpec(9, 8)), 36)
        self.assertEqual(PUBLISHED_CAPACITY[(9, 8)], 28)

    def test_invalid_units(self):
        with self.assertRaises(InvalidParameters):
            MuSpec(1, 1)
        with self.assertRaises(InvalidParameters):
            MuSpec(4, 4)
        with self.assertRaises(InvalidParameters):
            MuInventory(multi={(4, 1): 1})
        with self.assertRaises(InvalidParameters):
            max_pairs_bruteforce(MuSpec(13, 2))

    def test_published_inventory(self):
        inv = load('inventory', DATA_DIR / 'fig4b_inventory.json')
        self.assertEqual(inv.switch_ports, 32)
        self.assertEqual(ports_used(inv), 32)
        with self.assertLogs('src.network.capacity', level='WARNING'):
            self.assertEqual(total_capacity(inv), 58)
        self.assertEqual(total_capacity(inv, published_values=True), 50)

    def test_strict_port_constraint(self):
        inv = load('inventory', DATA_DIR / 'fig4b_inventory.json')
        with self.assertRaises(ConstraintViolation) as ctx:
            check_ports(inv, strict=True)
        self.assertEqual(ctx.exception.ports_used, 32)
        with self.assertRaises(ConstraintViolation):
            total_capacity(MuInventory(m2=3, switch_ports=5))

    def test_breakdown(self):
        inv = MuInventory(m2=2, multi={(9, 8): 1}, switch_ports=32)
        rows = capacity_breakdown(inv)
        self.assertEqual([r['unit'] for r in rows], ['M2', 'M9,8'])
        self.assertEqual(rows[1]['oracle'], 36)
        self.assertEqual(rows[1]['published'], 28)

    def test_whatif_ranking(self):
        rows = whatif_inventories([(2, 1), (4, 3)], switch_ports=8)
        self.assertEqual(rows[0]['capacity'], 12)
        self.assertEqual(rows[0]['inventory'].multi, {(4, 3): 2})
        capacities = [r['capacity'] for r in rows]
        self.assertEqual(capacities, sorted(capacities, reverse=True))
        self.assertTrue(all(r['ports_used'] <= 8 for r in rows))

    def test_whatif_strict_and_top(self):
        rows = whatif_inventories([(4, 3)], switch_ports=8, strict=True, top=1)
        self.assertEqual(len(rows), 1)
        self.assertEqual(rows[0]['ports_used'], 4)


class TestScheduler(unittest.TestCase):

    def setUp(self):
        self.inv = load('inventory', DATA_DIR / 'fig4b_inventory.json')
        self.users, self.requests = load('requests', DATA_DIR / 'example_requests.json')

    def test_normalize_requests(self):
        self.assertEqual(normalize_requests([(3, 1), (1, 3), (2, 4)]), [(1, 3), (2, 4)])
        with self.assertRaises(InvalidParameters):
            normalize_requests([(2, 2)])

    def test_max_degree_subgraph(self):
        triangle = [(1, 2), (1, 3), (2, 3)]
        self.assertEqual(len(max_degree_subgraph(triangle, 1)), 1)
        self.assertEqual(max_degree_subgraph(triangle, 2), triangle)
        k4 = all_pairs([1, 2, 3, 4])
        self.assertEqual(len(max_degree_subgraph(k4, 1)), 2)
        self.assertEqual(max_degree_subgraph([], 3), [])

    def test_example_requests_all_served(self):
        plan = schedule(self.users, self.requests, self.inv)
        self.assertEqual(plan.method, 'exact')
        self.assertEqual(plan.served, 7)
        self.assertEqual(plan.unserved, [])
        self.assertEqual(validate_plan(plan, self.inv, self.requests), [])

    def test_greedy_plan_is_valid(self):
        plan = schedule(self.users, self.requests, self.inv, exact_limit=0)
        self.assertEqual(plan.method, 'greedy')
        self.assertEqual(plan.served, 7)
        self.assertEqual(validate_plan(plan, self.inv, self.requests), [])

    def test_two_user_units(self):
        inv = MuInventory(m2=2, switch_ports=4)
        requests = [(1, 2), (2, 3), (3, 4)]
        plan = schedule([1, 2, 3, 4], requests, inv)
        self.assertEqual(plan.served, 2)
        self.assertEqual(plan.unserved, [(2, 3)])
        self.assertEqual(validate_plan(plan, inv, requests), [])

    def test_inactive_users_are_unserved(self):
        plan = schedule([1, 2], [(1, 2), (2, 3)], MuInventory(m2=1, switch_ports=4))
        self.assertEqual(plan.served, 1)
        self.assertEqual(plan.unserved, [(2, 3)])

    def test_too_many_active_users(self):
        with self.assertRaises(InvalidParameters):
            schedule(range(1, 6), [(1, 2)], MuInventory(m2=1, switch_ports=4))

    def test_validate_plan_reports_violations(self):
        inv = MuInventory(m2=1, switch_ports=4)
        plan = PairingPlan(assignments=[(1, 2, 'M2#0'), (1, 3, 'M2#0'), (4, 5, 'M9,8#0')])
        problems = validate_plan(plan, inv)
        self.assertIn('unknown unit M9,8#0', problems)
        self.assertIn('user 1 in 2 pairs of M2#0', problems)
        self.assertIn('M2#0 holds 3 users', problems)


class TestNetworkRate(unittest.TestCase):

    def setUp(self):
        self.params = load('params', DATA_DIR / 'table1_20db.json').with_values(mu_o=0.0)
        self.sec = SecurityParams()
        self.base = ChannelSpec(loss_i_db=0.0, loss_j_db=0.0, visibility=0.95)

    def test_splitter_loss(self):
        self.assertEqual(mu_path_loss_db(MuSpec(2, 1)), 0.0)
        self.assertAlmostEqual(mu_path_loss_db(MuSpec(3, 2)), 10 * 0.30103 + 1.0, places=4)
        self.assertAlmostEqual(mu_path_loss_db(MuSpec(9, 8), stage_excess_db=0.5), 9.0309 + 1.5, places=4)

    def test_symmetric_channels(self):
        inv = MuInventory(m2=1, multi={(4, 3): 1}, switch_ports=8)
        plan = PairingPlan(assignments=[(1, 2, 'M2#0'), (3, 4, 'M4,3#0')])
        channels = symmetric_channels(plan, inv, 100.0, self.base)
        self.assertAlmostEqual(channels[(1, 2)].loss_i_db, 10.0)
        self.assertEqual(channels[(1, 2)].mu_excess_loss_db, 0.0)
        self.assertGreater(channels[(3, 4)].mu_excess_loss_db, 0.0)

    @patch('src.network.rate.simulate_keyrate')
    def test_shared_channels_evaluated_once(self, mock_simulate):
        mock_simulate.return_value = fixed_report(1e-4)
        inv = MuInventory(m2=2, switch_ports=4)
        plan = PairingPlan(assignments=[(1, 2, 'M2#0'), (3, 4, 'M2#1')])
        channels = symmetric_channels(plan, inv, 50.0, self.base)
        result = network_rate(plan, channels, self.params, self.sec, 1e10)
        self.assertEqual(mock_simulate.call_count, 1)
        self.assertAlmostEqual(result.total_per_pulse, 2e-4)
        self.assertAlmostEqual(result.total_bps, bits_per_second(2e-4))
        self.assertEqual(result.best_pair_bps, result.worst_pair_bps)

    @patch('src.network.rate.simulate_keyrate')
    def test_failed_pairs_contribute_zero(self, mock_simulate):
        mock_simulate.side_effect = QNetException("boom")
        inv = MuInventory(m2=1, switch_ports=2)
        plan = PairingPlan(assignments=[(1, 2, 'M2#0')])
        channels = symmetric_channels(plan, inv, 50.0, self.base)
        result = network_rate(plan, channels, self.params, self.sec, 1e10)
        self.assertEqual(result.failed, [(1, 2)])
        self.assertEqual(result.total_bps, 0.0)

    @patch('src.network.rate.simulate_keyrate')
    def test_active_user_sweep_rows(self, mock_simulate):
        mock_simulate.return_value = fixed_report(1e-5)
        inv = MuInventory(multi={(4, 3): 1}, switch_ports=4)
        rows = active_user_sweep(inv, [4, 2], [50.0, 10.0], self.params, self.sec, 1e10, self.base)
        self.assertEqual([(r['active_users'], r['distance_km']) for r in rows],
                         [(2, 10.0), (2, 50.0), (4, 10.0), (4, 50.0)])
        self.assertEqual(rows[0]['pairs_served'], 1)
        self.assertEqual(rows[2]['pairs_served'], 6)
        self.assertAlmostEqual(rows[2]['total_per_pulse'], 6e-5)


class TestInstalledNetwork(unittest.TestCase):
    """All 32 users of the installed switch, recorded operating point and visibility."""

    def setUp(self):
        self.inv = load('inventory', DATA_DIR / 'fig4b_inventory.json')
        self.params = load('params', DATA_DIR / 'table1_20db.json')
        self.sec = SecurityParams()
        self.base = ChannelSpec(loss_i_db=0.0, loss_j_db=0.0, visibility=0.9672)

    def sweep(self, distances):
        return active_user_sweep(self.inv, [32], distances, self.params, self.sec, 1e11, self.base)

    def test_hundred_km_network_rate(self):
        row, = self.sweep([100.0])
        self.assertEqual(row['pairs_served'], 58)
        # Published: 4.84e4 bit/s in total, 4.77e3 bit/s on the best pair
        self.assertGreater(row['total_bps'], 4.84e4 / 3)
        self.assertLess(row['total_bps'], 4.84e4 * 3)
        self.assertGreater(row['best_pair_bps'], 4.77e3 / 3)
        self.assertLess(row['best_pair_bps'], 4.77e3 * 3)

    def test_network_rate_falls_with_distance(self):
        rows = self.sweep([0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0])
        totals = [row['total_bps'] for row in rows]
        self.assertGreater(totals[0], 0.0)
        for nearer, farther in zip(totals, totals[1:]):
            self.assertGreaterEqual(nearer, farther)

    def test_pair_rate_falls_with_distance(self):
        inv = MuInventory(m2=1, switch_ports=2)
        plan = PairingPlan(assignments=[(1, 2, 'M2#0')])
        rates = []
        for distance in range(0, 301, 25):
            channels = symmetric_channels(plan, inv, float(distance), self.base)
            result = network_rate(plan, channels, self.params.with_values(mu_o=0.0), self.sec, 1e10)
            rates.append(result.total_per_pulse)
        self.assertGreater(rates[0], 0.0)
        for nearer, farther in zip(rates, rates[1:]):
            self.assertGreaterEqual(nearer, farther)


if __name__ == '__main__':
    unittest.main()
