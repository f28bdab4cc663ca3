"""
Single-photon Bell-state measurement model.
Channel description, the two-detector interference click model and the
decoy-window phase filter.
"""

import logging
import math
from dataclasses import dataclass, asdict
from typing import Dict, Tuple, Union

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from src.core.exceptions import InvalidParameters

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Tolerance for phase differences sitting exactly on the filter threshold
_FILTER_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ChannelSpec:
    """Per-arm loss and detector parameters of one user pair."""
    loss_i_db: float
    loss_j_db: float
    detector_efficiency: float = 0.45
    dark_count: float = 8e-8
    visibility: float = 0.95
    mu_excess_loss_db: float = 0.0
    residual_phase_std: float = 0.0

    def __post_init__(self) -> None:
        for name in ('loss_i_db', 'loss_j_db', 'mu_excess_loss_db', 'residual_phase_std'):
            value = getattr(self, name)
            if math.isnan(value) or value < 0:
                raise InvalidParameters(f"{name} must be >= 0, got {value}")
        for name in ('detector_efficiency', 'dark_count', 'visibility'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidParameters(f"{name} must lie in [0, 1], got {value}")

    def transmittance(self, arm: str) -> float:
        """Overall detection transmittance of arm 'i' or 'j'."""
        loss = self.loss_i_db if arm == 'i' else self.loss_j_db
        return self.detector_efficiency * 10 ** (-(loss + self.mu_excess_loss_db) / 10)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class PhaseFilter:
    """Post-selection of decoy-window events on announced phase slices."""
    slices: int = 16

    def __post_init__(self) -> None:
        if self.slices < 2 or self.slices % 2:
            raise InvalidParameters(f"Phase slices must be even and >= 2, got {self.slices}")

    @property
    def threshold(self) -> float:
        return math.cos(math.pi / self.slices)

    @property
    def lam(self) -> float:
        """Equivalent small positive value of the 1 - |cos| <= lambda form."""
        return 1.0 - self.threshold

    def phase(self, k: ArrayLike) -> ArrayLike:
        return 2 * np.pi * np.asarray(k) / self.slices

    def passes(self, theta_i: ArrayLike, theta_j: ArrayLike, phi: float = 0.0) -> ArrayLike:
        """|cos(theta_i - theta_j - phi)| >= cos(pi / slices)."""
        return np.abs(np.cos(np.asarray(theta_i) - np.asarray(theta_j) - phi)) \
            >= self.threshold - _FILTER_TOLERANCE

    def expected_detector(self, theta_i: ArrayLike, theta_j: ArrayLike, phi: float = 0.0) -> ArrayLike:
        """0 where constructive interference lands on D0, 1 where it lands on D1."""
        return np.where(np.cos(np.asarray(theta_i) - np.asarray(theta_j) - phi) >= 0, 0, 1)

    def pass_fraction(self, phi: float = 0.0) -> float:
        """Fraction of the slices x slices phase grid accepted by the filter."""
        k = np.arange(self.slices)
        theta_i, theta_j = np.meshgrid(self.phase(k), self.phase(k), indexing='ij')
        return float(np.mean(self.passes(theta_i, theta_j, phi)))

    def difference_grid(self) -> np.ndarray:
        """All phase differences theta_i - theta_j, each equally likely."""
        return self.phase(np.arange(self.slices))


def click_probabilities(
    mu_i: ArrayLike,
    mu_j: ArrayLike,
    delta: ArrayLike,
    ch: ChannelSpec
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Click probabilities of detectors D0 and D1 behind the beam splitter.

    Args:
        mu_i: Intensity sent by user i
        mu_j: Intensity sent by user j
        delta: Phase difference at the beam splitter (rad)
        ch: Channel and detector description

    Returns:
        Tuple (p_d0, p_d1)
    """
    mu_i = np.asarray(mu_i, dtype=float)
    mu_j = np.asarray(mu_j, dtype=float)
    if np.any(mu_i < 0) or np.any(mu_j < 0):
        raise InvalidParameters("Intensities must be non-negative")
    nu_i = mu_i * ch.transmittance('i')
    nu_j = mu_j * ch.transmittance('j')
    cross = 2 * ch.visibility * np.sqrt(nu_i * nu_j) * np.cos(delta)
    no_dark = 1.0 - ch.dark_count
    p_d0 = 1.0 - no_dark * np.exp(-(nu_i + nu_j + cross) / 2)
    p_d1 = 1.0 - no_dark * np.exp(-(nu_i + nu_j - cross) / 2)
    return p_d0, p_d1


def single_response_probability(
    mu_i: ArrayLike,
    mu_j: ArrayLike,
    delta: ArrayLike,
    ch: ChannelSpec
) -> np.ndarray:
    """Probability that exactly one of the two detectors clicks."""
    p_d0, p_d1 = click_probabilities(mu_i, mu_j, delta, ch)
    return p_d0 * (1 - p_d1) + p_d1 * (1 - p_d0)


def residual_phase_nodes(std: float, order: int = 24) -> Tuple[np.ndarray, np.ndarray]:
    """
    Quadrature nodes and weights for averaging over a Gaussian residual phase.

    Returns a single zero node when tracking is perfect.
    """
    if std <= 0:
        return np.zeros(1), np.ones(1)
    nodes, weights = hermegauss(order)
    return std * nodes, weights / weights.sum()


def fringe_visibility(mu: float, ch: ChannelSpec, points: int = 360) -> float:
    """
    Visibility read off a D0 count fringe at balanced intensities.

    Args:
        mu: Intensity sent by both users
        ch: Channel and detector description
        points: Number of phase settings in the sweep

    Returns:
        (max - min) / (max + min) of the D0 click probability
    """
    delta = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    p_d0, _ = click_probabilities(mu, mu, delta, ch)
    high, low = float(np.max(p_d0)), float(np.min(p_d0))
    if high + low == 0:
        return 0.0
    return (high - low) / (high + low)


def single_photon_yields(ch: ChannelSpec) -> Dict[str, float]:
    """
    Photon-number ground truth of the click model.

    Returns:
        Dictionary with the |01> and |10> single-photon yields, their mean and
        the phase-error proxy of the single-photon component
    """
    d = ch.dark_count
    dark_single = 2 * d * (1 - d)

    def one_photon(eta: float) -> float:
        return eta * (1 - d) + (1 - eta) * dark_single

    y01 = one_photon(ch.transmittance('j'))
    y10 = one_photon(ch.transmittance('i'))
    proxy = (1 - ch.visibility * math.exp(-ch.residual_phase_std ** 2 / 2)) / 2
    return {'y01': y01, 'y10': y10, 'y1': (y01 + y10) / 2, 'phase_error_proxy': proxy}
