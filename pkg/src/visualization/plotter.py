"""
Key-rate visualization module.
Renders loss sweeps and network-rate surfaces to image files using matplotlib.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np

logger = logging.getLogger(__name__)


class RatePlotter:
    """Static key-rate figures in the dark analyzer style."""

    def __init__(self, figsize: tuple = (10, 6), dpi: int = 150):
        """
        Initialize the plotter.

        Args:
            figsize: Figure size in inches
            dpi: Output resolution
        """
        self.figsize = figsize
        self.dpi = dpi

    def _setup_axes(self, xlabel: str, ylabel: str):
        """Create a figure with the dark background and muted grid."""
        plt.style.use('dark_background')
        fig, ax = plt.subplots(figsize=self.figsize, tight_layout=True)
        fig.patch.set_facecolor('#000000')
        ax.set_facecolor('#000000')
        ax.tick_params(axis='both', colors='white')
        for spine in ax.spines.values():
            spine.set_color('#444444')
        ax.set_xlabel(xlabel, color='white')
        ax.set_ylabel(ylabel, color='white')
        ax.grid(True, which='both', color='#333333', alpha=0.5)
        return fig, ax

    def _save(self, fig, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=self.dpi)
        plt.close(fig)
        logger.info(f"Saved figure to {path}")
        return path

    def plot_sweep(
        self,
        rows: Sequence[Dict],
        path: Union[str, Path],
        x: str = 'loss_db',
        reference: Optional[Dict[float, float]] = None
    ) -> Path:
        """
        Plot key rate per pulse against the swept variable.

        Args:
            rows: Sweep rows (see reports.sweep_row)
            path: Output image path
            x: Swept column, 'loss_db' or 'km'
            reference: Optional published points {x: R} drawn as markers

        Returns:
            Path of the written image
        """
        xlabel = 'Channel loss (dB)' if x == 'loss_db' else 'Distance (km)'
        fig, ax = self._setup_axes(xlabel, 'Key rate (bit/pulse)')
        points = sorted((r[x], r['R_per_pulse']) for r in rows if r.get(x) is not None)
        xs = np.array([p[0] for p in points], dtype=float)
        ys = np.array([p[1] for p in points], dtype=float)
        positive = ys > 0
        ax.semilogy(xs[positive], ys[positive], 'w-', marker='o', lw=1, label='simulated')
        if reference:
            ref = sorted(reference.items())
            ax.semilogy([p[0] for p in ref], [p[1] for p in ref], 'r^', alpha=0.7, label='reference')
        ax.legend(loc='best')
        return self._save(fig, path)

    def plot_network(self, rows: List[Dict], path: Union[str, Path]) -> Path:
        """
        Plot total network bit/s against distance, one line per active-user count.

        Args:
            rows: active_user_sweep rows
            path: Output image path
        """
        fig, ax = self._setup_axes('Distance (km)', 'Total key rate (bit/s)')
        by_users: Dict[int, List[Dict]] = {}
        for row in rows:
            by_users.setdefault(row['active_users'], []).append(row)
        colors = plt.cm.viridis(np.linspace(0, 1, max(len(by_users), 1)))
        for color, (users, group) in zip(colors, sorted(by_users.items())):
            group = sorted(group, key=lambda r: r['distance_km'])
            xs = [r['distance_km'] for r in group if r['total_bps'] > 0]
            ys = [r['total_bps'] for r in group if r['total_bps'] > 0]
            if xs:
                ax.semilogy(xs, ys, color=color, lw=1, label=f"{users} users")
        ax.legend(loc='best', fontsize=8)
        return self._save(fig, path)
