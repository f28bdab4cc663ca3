import tempfile
import unittest
from pathlib import Path

from src.visualization.plotter import RatePlotter


class TestRatePlotter(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.plotter = RatePlotter(figsize=(4, 3), dpi=50)

    def tearDown(self):
        self.tmp.cleanup()

    def test_sweep_figure(self):
        rows = [
            {'loss_db': 10.0, 'R_per_pulse': 1e-4},
            {'loss_db': 20.0, 'R_per_pulse': 1.5e-5},
            {'loss_db': 40.0, 'R_per_pulse': 0.0},
        ]
        path = self.plotter.plot_sweep(rows, Path(self.tmp.name) / 'figs' / 'sweep.png',
                                       reference={20.0: 2.02e-5})
        self.assertTrue(path.exists())
        self.assertGreater(path.stat().st_size, 0)

    def test_network_figure(self):
        rows = [
            {'active_users': k, 'distance_km': d, 'total_bps': 1e5 / (k * d)}
            for k in (4, 8) for d in (50.0, 100.0)
        ]
        path = self.plotter.plot_network(rows, Path(self.tmp.name) / 'network.png')
        self.assertTrue(path.exists())


if __name__ == '__main__':
    unittest.main()
