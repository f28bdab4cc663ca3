"""
Simulated key-rate pipeline.
Channel model -> detection tally -> bit-level AOPP -> finite-key rate.
"""

import logging
from typing import Optional, Tuple

from src.core.exceptions import InfeasibleBounds, InvalidParameters
from src.core.keyrate import KeyRateReport, evaluate_key_rate, infeasible_report
from src.core.params import AoppMeasurement, ProtocolParams, SecurityParams
from src.detection.detector import ChannelSpec, PhaseFilter
from src.detection.events import DEFAULT_INGESTION_MAP, DetectionTally
from src.simulation.frame import FrameSpec
from src.simulation.montecarlo import monte_carlo_session, synthetic_raw_key
from src.simulation.postprocessing import aopp_bitlevel
from src.simulation.tally import expected_tally

logger = logging.getLogger(__name__)

MODES = ('expected', 'montecarlo')
DEFAULT_AOPP_SAMPLE_SIZE = 1_000_000


def subsampled_aopp(
    tally: DetectionTally,
    sample_size: int = DEFAULT_AOPP_SAMPLE_SIZE,
    seed: Optional[int] = None
) -> Optional[AoppMeasurement]:
    """
    AOPP statistics of a tally's raw key from a proportional sub-sample.

    Draws min(sample_size, n_t) raw-key events in the tally's signal-window
    proportions, runs bit-level AOPP and scales the counts back to n_t.
    Returns None when the tally has no raw key.
    """
    n_t = tally.raw_key_length
    size = int(min(sample_size, round(n_t)))
    if size < 2:
        return None
    raw = synthetic_raw_key(tally.signal_counts, size=size, seed=seed)
    return aopp_bitlevel(raw, seed=seed).scaled(n_t / size)


def simulate_session(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: float,
    mode: str = 'expected',
    seed: Optional[int] = 0,
    aopp_sample_size: int = DEFAULT_AOPP_SAMPLE_SIZE,
    mapping: str = DEFAULT_INGESTION_MAP
) -> Tuple[DetectionTally, Optional[AoppMeasurement]]:
    """Detection tally and AOPP statistics of one simulated session."""
    if mode not in MODES:
        raise InvalidParameters(f"Unknown simulation mode '{mode}', expected one of {MODES}")
    if mode == 'expected':
        tally = expected_tally(params, ch, filt, N, mapping)
        return tally, subsampled_aopp(tally, aopp_sample_size, seed)

    raw, tally = monte_carlo_session(params, ch, filt, int(N), seed=seed, mapping=mapping)
    if len(raw) < 2:
        return tally, None
    return tally, aopp_bitlevel(raw, seed=seed)


def simulate_keyrate(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: float,
    sec: SecurityParams,
    mode: str = 'expected',
    seed: Optional[int] = 0,
    aopp_sample_size: int = DEFAULT_AOPP_SAMPLE_SIZE,
    frame: Optional[FrameSpec] = None
) -> KeyRateReport:
    """
    Key rate of a simulated user pair.

    Args:
        params: Protocol parameters
        ch: Channel and detector description
        filt: Decoy-window phase filter
        N: Pulses sent by each user
        sec: Security parameters
        mode: 'expected' (analytic tally) or 'montecarlo' (per-pulse sampling)
        seed: Seed of every random step
        aopp_sample_size: Raw-key sub-sample size for AOPP in expected mode
        frame: Frame structure giving clock rate and signal duty

    Returns:
        KeyRateReport
    """
    frame = frame or FrameSpec()
    tally, measured = simulate_session(params, ch, filt, N, mode, seed, aopp_sample_size)
    if measured is None:
        return infeasible_report(
            InfeasibleBounds('n_t <= 0'), N, clock_hz=frame.clock_hz, signal_duty=frame.signal_duty
        )
    return evaluate_key_rate(
        tally, measured, params, sec,
        clock_hz=frame.clock_hz,
        signal_duty=frame.signal_duty,
        filter_pass_fraction=filt.pass_fraction(),
    )
