"""
Bit-level actively odd-parity pairing.
"""

import logging
from typing import Optional

import numpy as np

from src.core.params import AoppMeasurement
from src.simulation.montecarlo import RawKeyPair

logger = logging.getLogger(__name__)


def random_grouping_odd_pairs(bits: np.ndarray, rng: np.random.Generator) -> int:
    """Odd-parity pairs when the bits are grouped two by two at random."""
    order = rng.permutation(bits.size)
    usable = order[:2 * (bits.size // 2)].reshape(-1, 2)
    return int(np.count_nonzero(bits[usable[:, 0]] != bits[usable[:, 1]]))


def aopp_bitlevel(raw: RawKeyPair, seed: Optional[int] = None) -> AoppMeasurement:
    """
    Run AOPP on a raw key.

    User j pairs each of its 0 bits with one of its 1 bits at random; a pair
    survives when user i's two bits also have odd parity. The bit at j's 0
    position is kept from every surviving pair.

    Args:
        raw: Raw key of both users
        seed: Seed for the random grouping and the active pairing

    Returns:
        AoppMeasurement with n_t, the pairs formed n_g, n_odd, the
        surviving pairs n_t' and their error rate E'
    """
    rng = np.random.default_rng(seed)
    n_t = len(raw)
    n_odd = random_grouping_odd_pairs(raw.bits_j, rng)

    zeros = rng.permutation(np.flatnonzero(raw.bits_j == 0))
    ones = rng.permutation(np.flatnonzero(raw.bits_j == 1))
    pairs = min(zeros.size, ones.size)
    first, second = zeros[:pairs], ones[:pairs]
    survives = raw.bits_i[first] != raw.bits_i[second]
    kept = first[survives]

    n_t_prime = int(kept.size)
    errors = int(np.count_nonzero(raw.bits_i[kept] != raw.bits_j[kept]))
    E_prime = errors / n_t_prime if n_t_prime else 0.0

    logger.info(
        f"AOPP: n_t={n_t}, n_odd={n_odd}, pairs={pairs}, survivors={n_t_prime}, E'={E_prime:.4%}"
    )
    return AoppMeasurement(
        n_t=float(n_t),
        n_g=float(pairs),
        n_odd=float(n_odd),
        n_t_prime=float(n_t_prime),
        E_prime=E_prime,
    )
