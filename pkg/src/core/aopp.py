"""
Finite-key estimates after actively odd-parity pairing.
Turns decoy-state bounds and measured pairing statistics into the number of
untagged bits and their phase-error rate in the paired key.
"""

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import List

from src.core.decoy import DecoyBounds
from src.core.exceptions import InfeasibleBounds
from src.core.params import AoppMeasurement, SecurityParams
from src.core.statistics import chernoff_real_lower, chernoff_real_upper, clamp

logger = logging.getLogger(__name__)


@dataclass
class AoppEstimate:
    """Every intermediate of the post-pairing estimate."""
    n_t: float
    n_g: float
    n_odd: float
    n_t_prime: float
    E_prime: float
    u: float = 0.0
    n10: float = 0.0
    n01: float = 0.0
    n1: float = 0.0
    n1r: float = 0.0
    n10_prime: float = 0.0
    n01_prime: float = 0.0
    n_min: float = 0.0
    n1_prime: float = 0.0
    r: float = 0.0
    e_tau: float = 0.0
    M_s_upper: float = 0.0
    e1ph_prime: float = 0.5
    clamps: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _infeasible(guard: str, estimate: AoppEstimate) -> InfeasibleBounds:
    logger.info(f"AOPP estimate infeasible: {guard}")
    return InfeasibleBounds(guard, partial=estimate)


def aopp_estimate(
    decoy: DecoyBounds,
    measured: AoppMeasurement,
    sec: SecurityParams
) -> AoppEstimate:
    """
    Lower-bound the untagged bits and upper-bound their phase-error rate after AOPP.

    Args:
        decoy: Feasible decoy-state bounds
        measured: Raw-key and pairing statistics (n_t, n_g, n_odd, n_t', E')
        sec: Security parameters; eps_chernoff is the failure probability of
            every estimate in the chain

    Returns:
        AoppEstimate with n1_prime and e1ph_prime

    Raises:
        InfeasibleBounds: When a guard of the chain fails; the partial
            estimate is attached
    """
    eps = sec.eps_chernoff
    estimate = AoppEstimate(
        n_t=measured.n_t,
        n_g=measured.n_g,
        n_odd=measured.n_odd,
        n_t_prime=measured.n_t_prime,
        E_prime=measured.E_prime,
    )
    clamps = estimate.clamps

    if measured.n_t <= 0:
        raise _infeasible('n_t <= 0', estimate)
    if measured.n_odd <= 0:
        raise _infeasible('n_odd <= 0', estimate)

    estimate.u = clamp(measured.n_g / (2 * measured.n_odd), 0.0, 1.0, 'u', clamps)

    estimate.n10 = chernoff_real_lower(decoy.n10_lower, eps)
    estimate.n01 = chernoff_real_lower(decoy.n01_lower, eps)
    n1 = estimate.n10 + estimate.n01
    estimate.n1 = n1
    if n1 <= 0:
        raise _infeasible('n1 <= 0', estimate)

    n_t = measured.n_t
    n1r = chernoff_real_lower((n1 / n_t) * (n1 / n_t) * estimate.u * n_t / 2, eps)
    estimate.n1r = n1r
    if n1r <= 0:
        raise _infeasible('n1r <= 0', estimate)

    correction = math.sqrt(math.log(1 / eps) / (2 * n1r))
    estimate.n10_prime = 2 * n1r * (estimate.n10 / n1 - correction)
    estimate.n01_prime = 2 * n1r * (estimate.n01 / n1 - correction)
    n_min = min(estimate.n01_prime, estimate.n10_prime)
    estimate.n_min = n_min
    if n_min <= 0:
        raise _infeasible('n_min <= 0', estimate)

    paired = n_min * (1 - n_min / (2 * n1r))
    if paired < 0:
        raise _infeasible('n_min (1 - n_min / 2 n1r) < 0', estimate)
    n1_prime = 2 * chernoff_real_lower(paired, eps)
    if n1_prime <= 0:
        raise _infeasible('n1_prime <= 0', estimate)
    if measured.n_t_prime > 0:
        n1_prime = clamp(n1_prime, 0.0, measured.n_t_prime, 'n1_prime', clamps)
    estimate.n1_prime = n1_prime

    gap = n1 - 2 * n1r
    if gap <= 0:
        raise _infeasible('n1 <= 2 n1r', estimate)
    r = n1 / gap * math.log(3 * gap ** 2 / eps)
    estimate.r = r
    if 2 * n1r <= r:
        raise _infeasible('2 n1r <= r', estimate)
    if n1r - r < 0:
        raise _infeasible('n1r < r', estimate)

    e_tau = chernoff_real_upper(2 * n1r * decoy.e1ph_upper, eps) / (2 * n1r - r)
    e_tau = clamp(e_tau, 0.0, 1.0, 'e_tau', clamps)
    estimate.e_tau = e_tau

    estimate.M_s_upper = chernoff_real_upper((n1r - r) * e_tau * (1 - e_tau), eps) + r
    estimate.e1ph_prime = clamp(
        2 * estimate.M_s_upper / n1_prime, 0.0, 0.5, 'e1ph_prime', clamps
    )

    logger.info(
        f"AOPP estimate: u={estimate.u:.4f}, n1'={n1_prime:.4e}, "
        f"e1ph'={estimate.e1ph_prime:.4f}"
    )
    return estimate
