"""
Network-wide key rate.
Per-pair channels of the symmetric star network and the summed key rate of
a pairing plan.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Tuple

from src.core.exceptions import QNetException
from src.core.keyrate import KeyRateReport, bits_per_second
from src.core.params import ProtocolParams, SecurityParams
from src.detection.detector import ChannelSpec, PhaseFilter
from src.network.capacity import MuInventory, MuSpec
from src.network.scheduler import Pair, PairingPlan, schedule
from src.simulation.frame import FrameSpec
from src.simulation.pipeline import simulate_keyrate

logger = logging.getLogger(__name__)

DEFAULT_LOSS_DB_PER_KM = 0.2
DEFAULT_STAGE_EXCESS_DB = 1.0

# Reported rates of the installed 32-user network:
# distance (km) -> (total bit/s, best pair bit/s)
PUBLISHED_NETWORK_RATES = {100.0: (4.84e4, 4.77e3)}


def mu_path_loss_db(mu: MuSpec, stage_excess_db: float = DEFAULT_STAGE_EXCESS_DB) -> float:
    """
    Loss of one arm through a unit's port splitter.

    1 x i splitting loss 10 log10(i) plus ``stage_excess_db`` for every 1 x 2
    stage; zero for the 2-user unit.
    """
    i = mu.ports_per_user
    if i <= 1:
        return 0.0
    return 10 * math.log10(i) + stage_excess_db * math.ceil(math.log2(i))


def symmetric_channels(
    plan: PairingPlan,
    inv: MuInventory,
    distance_km: float,
    base: ChannelSpec,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    stage_excess_db: float = DEFAULT_STAGE_EXCESS_DB
) -> Dict[Pair, ChannelSpec]:
    """
    Channels of every assigned pair when all users sit at the same distance.

    Args:
        plan: Pairing plan
        inv: Installed units
        distance_km: Fiber length between the two users of a pair; each arm
            carries half of it
        base: Detector and visibility settings shared by all pairs
        loss_db_per_km: Fiber attenuation
        stage_excess_db: Excess loss per splitter stage

    Returns:
        ChannelSpec per (user_a, user_b)
    """
    units = inv.unit_map()
    arm_db = loss_db_per_km * distance_km / 2
    channels = {}
    for a, b, mu_id in plan.assignments:
        channels[(a, b)] = replace(
            base,
            loss_i_db=arm_db,
            loss_j_db=arm_db,
            mu_excess_loss_db=mu_path_loss_db(units[mu_id], stage_excess_db),
        )
    return channels


@dataclass
class NetworkRate:
    """Summed key rate of a plan with the per-pair reports."""
    total_per_pulse: float
    total_bps: float
    per_pair: Dict[Pair, KeyRateReport] = field(default_factory=dict)
    failed: List[Pair] = field(default_factory=list)

    @property
    def best_pair_bps(self) -> float:
        return max((r.rate_bps for r in self.per_pair.values()), default=0.0)

    @property
    def worst_pair_bps(self) -> float:
        return min((r.rate_bps for r in self.per_pair.values()), default=0.0)

    def to_dict(self) -> dict:
        return {
            'total_per_pulse': self.total_per_pulse,
            'total_bps': self.total_bps,
            'best_pair_bps': self.best_pair_bps,
            'worst_pair_bps': self.worst_pair_bps,
            'failed': [list(p) for p in self.failed],
            'pairs': [
                {'user_a': a, 'user_b': b, 'rate_per_pulse': r.rate_per_pulse,
                 'rate_bps': r.rate_bps, 'feasible': r.feasible}
                for (a, b), r in sorted(self.per_pair.items())
            ],
        }


def network_rate(
    plan: PairingPlan,
    per_pair: Dict[Pair, ChannelSpec],
    params: ProtocolParams,
    sec: SecurityParams,
    N: float,
    filt: Optional[PhaseFilter] = None,
    mode: str = 'expected',
    seed: Optional[int] = 0,
    frame: Optional[FrameSpec] = None,
    workers: int = 1
) -> NetworkRate:
    """
    Sum the simulated key rates of all assigned pairs.

    Pairs sharing a channel are evaluated once. A pair whose evaluation
    raises contributes zero and is listed in ``failed``.
    """
    filt = filt or PhaseFilter()
    frame = frame or FrameSpec()
    distinct = sorted(set(per_pair.values()), key=lambda c: tuple(c.to_dict().values()))

    def evaluate(ch: ChannelSpec) -> Optional[KeyRateReport]:
        try:
            return simulate_keyrate(params, ch, filt, N, sec, mode=mode, seed=seed, frame=frame)
        except QNetException as e:
            logger.error(f"Pair evaluation failed for {ch}: {e}")
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = dict(zip(distinct, pool.map(evaluate, distinct)))
    else:
        reports = {ch: evaluate(ch) for ch in distinct}

    result = NetworkRate(total_per_pulse=0.0, total_bps=0.0)
    for a, b, _ in plan.assignments:
        report = reports.get(per_pair.get((a, b)))
        if report is None:
            result.failed.append((a, b))
            continue
        result.per_pair[(a, b)] = report
        result.total_per_pulse += report.rate_per_pulse
    result.total_bps = bits_per_second(result.total_per_pulse, frame.clock_hz, frame.signal_duty)
    logger.info(
        f"Network rate: {result.total_per_pulse:.4e} bit/pulse over {len(result.per_pair)} pairs"
    )
    return result


def all_pairs(users: Iterable[int]) -> List[Pair]:
    users = sorted(users)
    return [(a, b) for k, a in enumerate(users) for b in users[k + 1:]]


def active_user_sweep(
    inv: MuInventory,
    user_counts: Iterable[int],
    distances_km: Iterable[float],
    params: ProtocolParams,
    sec: SecurityParams,
    N: float,
    base: ChannelSpec,
    filt: Optional[PhaseFilter] = None,
    loss_db_per_km: float = DEFAULT_LOSS_DB_PER_KM,
    stage_excess_db: float = DEFAULT_STAGE_EXCESS_DB,
    seed: Optional[int] = 0,
    frame: Optional[FrameSpec] = None,
    workers: int = 1
) -> List[dict]:
    """
    Total network rate over active-user counts and distances.

    With k active users (ids 1..k) every pair among them is requested and
    the plan is scheduled once per k.

    Returns:
        One row per (active users, distance), sorted by both
    """
    rows = []
    distances = sorted(distances_km)
    for k in sorted(user_counts):
        users = list(range(1, k + 1))
        plan = schedule(users, all_pairs(users), inv)
        for distance in distances:
            channels = symmetric_channels(plan, inv, distance, base, loss_db_per_km, stage_excess_db)
            result = network_rate(plan, channels, params, sec, N, filt,
                                  seed=seed, frame=frame, workers=workers)
            rows.append({
                'active_users': k,
                'distance_km': distance,
                'pairs_served': plan.served,
                'total_per_pulse': result.total_per_pulse,
                'total_bps': result.total_bps,
                'best_pair_bps': result.best_pair_bps,
                'worst_pair_bps': result.worst_pair_bps,
            })
    return rows
