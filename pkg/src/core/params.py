"""
Protocol and security parameter sets.
Defines the validated inputs of the three-intensity SNS finite-key analysis.
"""

import math
from dataclasses import dataclass, asdict, replace
from typing import Dict

from src.core.exceptions import DegenerateDenominator, InvalidParameters

# Intensity keys used throughout: vacuum, decoy, signal
INTENSITIES = ('o', 'x', 'y')

PROBABILITY_TOLERANCE = 1e-12


def _check_probability(name: str, value: float, open_interval: bool = False) -> None:
    if not math.isfinite(value):
        raise InvalidParameters(f"{name} must be finite, got {value}")
    if open_interval:
        if not 0.0 < value < 1.0:
            raise InvalidParameters(f"{name} must lie in (0, 1), got {value}")
    elif not 0.0 <= value <= 1.0:
        raise InvalidParameters(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class ProtocolParams:
    """Source intensities and window probabilities of the three-intensity protocol."""
    mu_o: float
    mu_x: float
    mu_y: float
    p_o: float
    p_x: float
    p_y: float
    eps_send: float
    mu_ref: float = 1.5

    def __post_init__(self) -> None:
        for name in ('mu_o', 'mu_x', 'mu_y', 'mu_ref'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParameters(f"{name} must be a non-negative number, got {value}")
        if self.mu_x == self.mu_y or self.mu_x == 0:
            raise DegenerateDenominator(
                f"Decoy denominator vanishes for mu_x={self.mu_x}, mu_y={self.mu_y}"
            )
        if not self.mu_o < self.mu_x < self.mu_y:
            raise InvalidParameters(
                f"Intensities must satisfy 0 <= mu_o < mu_x < mu_y, got "
                f"{self.mu_o}, {self.mu_x}, {self.mu_y}"
            )
        for name in ('p_o', 'p_x', 'p_y'):
            _check_probability(name, getattr(self, name))
        total = self.p_o + self.p_x + self.p_y
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidParameters(f"p_o + p_x + p_y must equal 1, got {total!r}")
        _check_probability('eps_send', self.eps_send, open_interval=True)

    @classmethod
    def from_windows(
        cls,
        mu_o: float,
        mu_x: float,
        mu_y: float,
        p_x: float,
        p_y: float,
        eps_send: float,
        mu_ref: float = 1.5
    ) -> 'ProtocolParams':
        """Build parameters with the vacuum probability implied by p_o = 1 - p_x - p_y."""
        p_o = 1.0 - p_x - p_y
        if p_o < 0 and p_o > -PROBABILITY_TOLERANCE:
            p_o = 0.0
        return cls(mu_o=mu_o, mu_x=mu_x, mu_y=mu_y, p_o=p_o, p_x=p_x, p_y=p_y,
                   eps_send=eps_send, mu_ref=mu_ref)

    def intensity(self, key: str) -> float:
        """Mean photon number of source 'o', 'x' or 'y'."""
        return {'o': self.mu_o, 'x': self.mu_x, 'y': self.mu_y}[key]

    def with_values(self, **changes: float) -> 'ProtocolParams':
        """Copy with window probabilities re-normalised through p_o."""
        values = {k: v for k, v in self.to_dict().items() if k != 'p_o'}
        values.update(changes)
        values.pop('p_o', None)
        return ProtocolParams.from_windows(**values)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class SecurityParams:
    """Failure probabilities and error-correction efficiency of the key-rate formula."""
    eps_cor: float = 1e-10
    eps_pa: float = 1e-10
    eps_hat: float = 1e-10
    eps_chernoff: float = 1e-10
    f_ec: float = 1.1

    def __post_init__(self) -> None:
        for name in ('eps_cor', 'eps_pa', 'eps_hat', 'eps_chernoff'):
            _check_probability(name, getattr(self, name), open_interval=True)
        if not math.isfinite(self.f_ec) or self.f_ec < 1.0:
            raise InvalidParameters(f"f_ec must be >= 1, got {self.f_ec}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class AoppMeasurement:
    """
    Raw-key statistics before and after actively odd-parity pairing.

    n_g counts the pairs user j forms (one 0 bit with one 1 bit) and n_t'
    those that survive the parity check; E' is the error rate of the bits
    kept from the survivors.
    """
    n_t: float
    n_g: float
    n_odd: float
    n_t_prime: float
    E_prime: float

    def __post_init__(self) -> None:
        for name in ('n_t', 'n_g', 'n_odd', 'n_t_prime'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidParameters(f"{name} must be a non-negative count, got {value}")
        _check_probability('E_prime', self.E_prime)

    def scaled(self, factor: float) -> 'AoppMeasurement':
        """Scale the counts of a sub-sampled run up to the full raw key."""
        return replace(
            self,
            n_t=self.n_t * factor,
            n_g=self.n_g * factor,
            n_odd=self.n_odd * factor,
            n_t_prime=self.n_t_prime * factor
        )

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)
