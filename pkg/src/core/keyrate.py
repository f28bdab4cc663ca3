"""
Secure Key Rate
Final finite-key rate after AOPP, its bit/s conversion and the end-to-end
evaluation from a detection tally.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from src.core.aopp import AoppEstimate, aopp_estimate
from src.core.decoy import DEFAULT_PASS_FRACTION, DecoyBounds, decoy_bounds
from src.core.exceptions import InfeasibleBounds, InvalidParameters
from src.core.params import AoppMeasurement, ProtocolParams, SecurityParams
from src.core.statistics import shannon_entropy
from src.detection.events import DetectionTally

logger = logging.getLogger(__name__)

DEFAULT_CLOCK_HZ = 1e8
# 400 signal pulses in every 1024-pulse frame
DEFAULT_SIGNAL_DUTY = 400 / 1024


@dataclass
class KeyRateReport:
    """Derivation trace of one key-rate evaluation."""
    rate_per_pulse: float
    rate_bps: float
    feasible: bool
    raw_rate: float = 0.0
    N: float = 0.0
    clock_hz: float = DEFAULT_CLOCK_HZ
    signal_duty: float = DEFAULT_SIGNAL_DUTY
    decoy: Optional[DecoyBounds] = None
    aopp: Optional[AoppEstimate] = None
    terms: Dict[str, float] = field(default_factory=dict)
    guard: Optional[str] = None
    clamps: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'rate_per_pulse': self.rate_per_pulse,
            'rate_bps': self.rate_bps,
            'feasible': self.feasible,
            'raw_rate': self.raw_rate,
            'N': self.N,
            'clock_hz': self.clock_hz,
            'signal_duty': self.signal_duty,
            'guard': self.guard,
            'terms': dict(self.terms),
            'decoy': self.decoy.to_dict() if self.decoy is not None else None,
            'aopp': self.aopp.to_dict() if self.aopp is not None else None,
            'clamps': list(self.clamps),
        }


def bits_per_second(
    R: float,
    clock_hz: float = DEFAULT_CLOCK_HZ,
    signal_duty: float = DEFAULT_SIGNAL_DUTY
) -> float:
    """
    Convert a rate in bit/pulse to bit/s.

    Args:
        R: Key rate per signal pulse
        clock_hz: Source clock rate
        signal_duty: Fraction of clock slots carrying signal pulses

    Returns:
        R * clock_hz * signal_duty
    """
    if not 0.0 < signal_duty <= 1.0:
        raise InvalidParameters(f"Signal duty must lie in (0, 1], got {signal_duty}")
    if not clock_hz > 0:
        raise InvalidParameters(f"Clock rate must be positive, got {clock_hz}")
    if not math.isfinite(R):
        raise InvalidParameters(f"Key rate must be finite, got {R}")
    return R * clock_hz * signal_duty


def key_rate(
    aopp: AoppEstimate,
    N: float,
    sec: SecurityParams,
    decoy: Optional[DecoyBounds] = None,
    clock_hz: float = DEFAULT_CLOCK_HZ,
    signal_duty: float = DEFAULT_SIGNAL_DUTY
) -> KeyRateReport:
    """
    Evaluate the secure key rate

        R = (1/N) {n1' (1 - h(e1ph')) - f n_t' h(E') - 2 log2(2/eps_cor)
                   - 4 log2(1 / (sqrt(2) eps_pa eps_hat))}

    Negative values are reported as R = 0 with feasible=False.
    """
    if not N > 0:
        raise InvalidParameters(f"Pulse count must be positive, got {N}")
    terms = {
        'privacy': aopp.n1_prime * (1 - shannon_entropy(aopp.e1ph_prime)),
        'leakage': sec.f_ec * aopp.n_t_prime * shannon_entropy(aopp.E_prime),
        'correction': 2 * math.log2(2 / sec.eps_cor),
        'amplification': 4 * math.log2(1 / (math.sqrt(2) * sec.eps_pa * sec.eps_hat)),
    }
    raw = (terms['privacy'] - terms['leakage'] - terms['correction'] - terms['amplification']) / N
    feasible = raw > 0
    rate = raw if feasible else 0.0
    clamps = list(decoy.clamps if decoy is not None else []) + list(aopp.clamps)
    if not feasible:
        logger.info(f"Key rate {raw:.4e} is not positive; reporting R = 0")
    return KeyRateReport(
        rate_per_pulse=rate,
        rate_bps=bits_per_second(rate, clock_hz, signal_duty),
        feasible=feasible,
        raw_rate=raw,
        N=N,
        clock_hz=clock_hz,
        signal_duty=signal_duty,
        decoy=decoy,
        aopp=aopp,
        terms=terms,
        guard=None if feasible else 'R <= 0',
        clamps=clamps,
    )


def infeasible_report(
    error: InfeasibleBounds,
    N: float,
    decoy: Optional[DecoyBounds] = None,
    clock_hz: float = DEFAULT_CLOCK_HZ,
    signal_duty: float = DEFAULT_SIGNAL_DUTY
) -> KeyRateReport:
    """R = 0 report carrying whatever part of the trace was computed."""
    aopp = error.partial if isinstance(error.partial, AoppEstimate) else None
    if isinstance(error.partial, DecoyBounds):
        decoy = error.partial
    clamps = list(decoy.clamps if decoy is not None else [])
    clamps += list(aopp.clamps if aopp is not None else [])
    return KeyRateReport(
        rate_per_pulse=0.0,
        rate_bps=0.0,
        feasible=False,
        N=N,
        clock_hz=clock_hz,
        signal_duty=signal_duty,
        decoy=decoy,
        aopp=aopp,
        guard=error.guard,
        clamps=clamps,
    )


def evaluate_key_rate(
    tally: DetectionTally,
    measured: AoppMeasurement,
    params: ProtocolParams,
    sec: SecurityParams,
    clock_hz: float = DEFAULT_CLOCK_HZ,
    signal_duty: float = DEFAULT_SIGNAL_DUTY,
    filter_pass_fraction: float = DEFAULT_PASS_FRACTION
) -> KeyRateReport:
    """
    Run decoy bounds, the AOPP estimate and the rate formula on one session.

    Infeasibility anywhere in the chain yields a feasible=False report
    instead of an exception.
    """
    decoy = None
    try:
        decoy = decoy_bounds(tally, params, sec, filter_pass_fraction)
        aopp = aopp_estimate(decoy, measured, sec)
    except InfeasibleBounds as e:
        return infeasible_report(e, tally.total_pulses, decoy, clock_hz, signal_duty)
    return key_rate(aopp, tally.total_pulses, sec, decoy, clock_hz, signal_duty)
