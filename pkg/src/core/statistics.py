"""
Statistical Estimation Module
Binary entropy and the Chernoff-type conversions between expected and
realised event counts used by the finite-key analysis.
"""

import logging
import math
from typing import List

import numpy as np
from scipy.special import xlogy

from src.core.exceptions import InvalidParameters

logger = logging.getLogger(__name__)


def shannon_entropy(x: float) -> float:
    """
    Binary Shannon entropy h(x) in bits, with h(0) = h(1) = 0.

    Args:
        x: Probability in [0, 1]

    Raises:
        InvalidParameters: If x lies outside [0, 1]
    """
    if not (0.0 <= x <= 1.0):
        raise InvalidParameters(f"Entropy argument must lie in [0, 1], got {x}")
    return float(-(xlogy(x, x) + xlogy(1.0 - x, 1.0 - x)) / np.log(2.0))


def _beta(eps: float) -> float:
    if not 0.0 < eps < 1.0:
        raise InvalidParameters(f"Failure probability must lie in (0, 1), got {eps}")
    return math.log(1.0 / eps)


def _check_count(value: float, name: str) -> None:
    if not math.isfinite(value) or value < 0:
        raise InvalidParameters(f"{name} must be a non-negative number, got {value}")


def chernoff_real_upper(x: float, eps: float) -> float:
    """Upper bound phi^U on the realised count of a process with expectation x."""
    _check_count(x, "Expected value")
    beta = _beta(eps)
    return x + beta / 2 + math.sqrt(2 * beta * x + beta ** 2 / 4)


def chernoff_real_lower(x: float, eps: float) -> float:
    """Lower bound phi^L on the realised count of a process with expectation x."""
    _check_count(x, "Expected value")
    beta = _beta(eps)
    return max(0.0, x - math.sqrt(2 * beta * x))


def chernoff_expected_upper(k: float, eps: float) -> float:
    """Upper bound on the expectation of a process that produced k events."""
    _check_count(k, "Observed count")
    beta = _beta(eps)
    return k + beta + math.sqrt(2 * beta * k + beta ** 2)


def chernoff_expected_lower(k: float, eps: float) -> float:
    """Lower bound on the expectation of a process that produced k events."""
    _check_count(k, "Observed count")
    beta = _beta(eps)
    return max(0.0, k - math.sqrt(2 * beta * k))


def clamp(value: float, lower: float, upper: float, name: str, clamps: List[str]) -> float:
    """
    Clamp an intermediate into its physical range, recording any adjustment.

    Args:
        value: Raw value
        lower: Lowest admissible value
        upper: Highest admissible value
        name: Label stored in the clamp record
        clamps: Record list appended to when the value is moved

    Returns:
        Clamped value
    """
    if value < lower:
        clamps.append(f"{name}: {value:.6g} -> {lower:.6g}")
        logger.warning(f"Clamped {name} from {value:.6g} to {lower:.6g}")
        return lower
    if value > upper:
        clamps.append(f"{name}: {value:.6g} -> {upper:.6g}")
        logger.warning(f"Clamped {name} from {value:.6g} to {upper:.6g}")
        return upper
    return value
