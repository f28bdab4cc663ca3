"""
Operating-point search.
Coarse grid followed by coordinate descent with shrinking steps over the
intensities and window probabilities of the three-intensity protocol.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from threading import Lock
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import InfeasibleEverywhere, InvalidParameters, QNetException
from src.core.keyrate import KeyRateReport
from src.core.params import ProtocolParams, SecurityParams
from src.detection.detector import ChannelSpec, PhaseFilter
from src.simulation.frame import FrameSpec
from src.simulation.pipeline import simulate_keyrate

logger = logging.getLogger(__name__)

# Search coordinates; the first two are searched on a log scale
VARIABLES = ('mu_x', 'mu_y', 'p_x', 'p_y', 'eps_send')
LOG_VARIABLES = ('mu_x', 'mu_y')

# Operating points of the recorded 20 dB and 30 dB sessions; always tried
REFERENCE_POINTS = (
    {'mu_x': 0.01, 'mu_y': 0.44, 'p_x': 0.23, 'p_y': 0.72, 'eps_send': 0.25},
    {'mu_x': 0.01, 'mu_y': 0.43, 'p_x': 0.36, 'p_y': 0.53, 'eps_send': 0.25},
)


@dataclass(frozen=True)
class ParamBounds:
    """Search box and step controls."""
    mu_x: Tuple[float, float] = (0.002, 0.1)
    mu_y: Tuple[float, float] = (0.15, 0.8)
    p_x: Tuple[float, float] = (0.05, 0.6)
    p_y: Tuple[float, float] = (0.3, 0.9)
    eps_send: Tuple[float, float] = (0.05, 0.45)
    mu_o: float = 0.0
    mu_ref: float = 1.5
    p_o_min: float = 0.01
    grid_points: int = 3
    tolerance: float = 1e-3
    min_step: float = 1e-3
    max_passes: int = 200

    def __post_init__(self) -> None:
        for name in VARIABLES:
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise InvalidParameters(f"Bounds for {name} must satisfy lo <= hi, got {lo}, {hi}")
            if name in LOG_VARIABLES and lo <= 0:
                raise InvalidParameters(f"Bounds for {name} must be positive")
            if name not in LOG_VARIABLES and not (0.0 <= lo and hi <= 1.0):
                raise InvalidParameters(f"Bounds for {name} must lie in [0, 1]")
        if not self.mu_o < self.mu_x[0] or not self.mu_x[1] < self.mu_y[0]:
            raise InvalidParameters("Bounds must keep mu_o < mu_x < mu_y over the whole box")
        if not 0.0 <= self.p_o_min < 1.0:
            raise InvalidParameters(f"p_o_min must lie in [0, 1), got {self.p_o_min}")
        if self.grid_points < 2:
            raise InvalidParameters("grid_points must be >= 2")

    def axis(self, name: str) -> np.ndarray:
        lo, hi = getattr(self, name)
        if name in LOG_VARIABLES:
            return np.geomspace(lo, hi, self.grid_points)
        return np.linspace(lo, hi, self.grid_points)

    def to_unit(self, name: str, value: float) -> float:
        """Map a value to [0, 1] along its search scale."""
        lo, hi = getattr(self, name)
        if hi == lo:
            return 0.0
        if name in LOG_VARIABLES:
            return (math.log(value) - math.log(lo)) / (math.log(hi) - math.log(lo))
        return (value - lo) / (hi - lo)

    def from_unit(self, name: str, t: float) -> float:
        lo, hi = getattr(self, name)
        t = min(1.0, max(0.0, t))
        if name in LOG_VARIABLES:
            return math.exp(math.log(lo) + t * (math.log(hi) - math.log(lo)))
        return lo + t * (hi - lo)

    def admissible(self, values: Dict[str, float]) -> bool:
        return values['p_x'] + values['p_y'] <= 1.0 - self.p_o_min + 1e-12 \
            and values['mu_x'] < values['mu_y']


class KeyRateObjective:
    """Expected-mode key rate with a fixed AOPP seed and a result cache."""

    def __init__(
        self,
        ch: ChannelSpec,
        N: float,
        sec: SecurityParams,
        filt: Optional[PhaseFilter] = None,
        frame: Optional[FrameSpec] = None,
        seed: int = 0,
        aopp_sample_size: int = 200_000
    ):
        self.ch = ch
        self.N = N
        self.sec = sec
        self.filt = filt or PhaseFilter()
        self.frame = frame or FrameSpec()
        self.seed = seed
        self.aopp_sample_size = aopp_sample_size
        self._cache: Dict[tuple, Optional[KeyRateReport]] = {}
        self._lock = Lock()

    @staticmethod
    def key(params: ProtocolParams) -> tuple:
        return tuple(round(v, 12) for v in params.to_dict().values())

    def report(self, params: ProtocolParams) -> Optional[KeyRateReport]:
        key = self.key(params)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        try:
            result = simulate_keyrate(
                params, self.ch, self.filt, self.N, self.sec,
                mode='expected', seed=self.seed,
                aopp_sample_size=self.aopp_sample_size, frame=self.frame
            )
        except QNetException as e:
            logger.debug(f"Objective failed at {params}: {e}")
            result = None
        with self._lock:
            self._cache[key] = result
        return result

    def __call__(self, params: ProtocolParams) -> float:
        result = self.report(params)
        return result.rate_per_pulse if result is not None else 0.0

    @property
    def evaluations(self) -> int:
        return len(self._cache)


@dataclass
class OptimizationResult:
    best: ProtocolParams
    report: KeyRateReport
    evaluations: int
    starts: List[ProtocolParams] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'best': self.best.to_dict(),
            'report': self.report.to_dict(),
            'evaluations': self.evaluations,
        }


def _params(values: Dict[str, float], bounds: ParamBounds, mu_o: float) -> Optional[ProtocolParams]:
    if not bounds.admissible(values):
        return None
    try:
        return ProtocolParams.from_windows(
            mu_o=mu_o, mu_x=values['mu_x'], mu_y=values['mu_y'],
            p_x=values['p_x'], p_y=values['p_y'], eps_send=values['eps_send'],
            mu_ref=bounds.mu_ref
        )
    except InvalidParameters:
        return None


def _order_key(rate: float, params: ProtocolParams) -> tuple:
    """Higher rate first, then lexicographically smaller parameters."""
    return (-rate,) + tuple(getattr(params, name) for name in VARIABLES)


def reference_points(bounds: ParamBounds) -> List[ProtocolParams]:
    """The recorded operating points with the box's vacuum and reference intensities."""
    points = []
    for values in REFERENCE_POINTS:
        params = _params(values, bounds, bounds.mu_o)
        if params is not None:
            points.append(params)
    return points


def coarse_grid(
    objective: KeyRateObjective,
    bounds: ParamBounds,
    workers: int = 1
) -> List[Tuple[float, ProtocolParams]]:
    """Evaluate the grid; returns (rate, params) sorted best first."""
    points = []
    for combo in itertools.product(*(bounds.axis(name) for name in VARIABLES)):
        params = _params(dict(zip(VARIABLES, combo)), bounds, bounds.mu_o)
        if params is not None:
            points.append(params)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rates = list(pool.map(objective, points))
    else:
        rates = [objective(p) for p in points]
    ranked = sorted(zip(rates, points), key=lambda rp: _order_key(*rp))
    logger.info(f"Coarse grid: {len(points)} points, best R={ranked[0][0] if ranked else 0:.4e}")
    return ranked


def coordinate_descent(
    objective: KeyRateObjective,
    bounds: ParamBounds,
    start: ProtocolParams
) -> Tuple[float, ProtocolParams]:
    """Improve one coordinate at a time, halving the step when a pass stalls."""
    current = start
    rate = objective(current)
    position = {name: bounds.to_unit(name, getattr(current, name)) for name in VARIABLES}
    step = 1.0 / (bounds.grid_points - 1)

    for _ in range(bounds.max_passes):
        pass_start = rate
        for name in VARIABLES:
            for direction in (1, -1):
                trial = dict(position)
                trial[name] = min(1.0, max(0.0, position[name] + direction * step))
                if trial[name] == position[name]:
                    continue
                values = {n: bounds.from_unit(n, trial[n]) for n in VARIABLES}
                candidate = _params(values, bounds, current.mu_o)
                if candidate is None:
                    continue
                candidate_rate = objective(candidate)
                if candidate_rate > rate:
                    current, rate, position = candidate, candidate_rate, trial
                    break
        gained = rate - pass_start
        if gained <= bounds.tolerance * max(pass_start, 0.0) or pass_start == rate:
            step /= 2
            if step < bounds.min_step:
                break
    return rate, current


def optimize_params(
    ch: ChannelSpec,
    N: float,
    sec: SecurityParams,
    bounds: Optional[ParamBounds] = None,
    seed: int = 0,
    start: Optional[ProtocolParams] = None,
    filt: Optional[PhaseFilter] = None,
    frame: Optional[FrameSpec] = None,
    workers: int = 1,
    objective: Optional[KeyRateObjective] = None
) -> OptimizationResult:
    """
    Search the protocol parameters maximising the expected-mode key rate.

    Args:
        ch: Channel of the user pair
        N: Pulses sent by each user
        sec: Security parameters
        bounds: Search box
        seed: Seed of the objective's AOPP sample and of the restart choice
        start: Optional warm start; like the recorded operating points it is
            both a descent start and a final candidate
        filt: Decoy-window phase filter
        frame: Frame structure
        workers: Threads for the grid evaluation
        objective: Pre-built objective (shares its cache with the caller)

    Returns:
        OptimizationResult with the best point and its report

    Raises:
        InfeasibleEverywhere: If no evaluated point gives R > 0
    """
    bounds = bounds or ParamBounds()
    objective = objective or KeyRateObjective(ch, N, sec, filt, frame, seed=seed)
    ranked = coarse_grid(objective, bounds, workers)

    starts = [params for _, params in ranked[:1]]
    rng = np.random.default_rng(seed)
    pool = [params for _, params in ranked[1:10]]
    if pool:
        picks = rng.choice(len(pool), size=min(2, len(pool)), replace=False)
        starts.extend(pool[k] for k in sorted(picks))
    references = reference_points(bounds)
    if start is not None:
        references.insert(0, start)
    starts.extend(references)

    candidates = list(ranked[:1])
    for point in starts:
        if objective(point) <= 0:
            continue
        candidates.append(coordinate_descent(objective, bounds, point))
    candidates.extend((objective(point), point) for point in references)

    best_rate, best = min(candidates, key=lambda rp: _order_key(*rp)) if candidates else (0.0, None)
    if best is None or best_rate <= 0:
        raise InfeasibleEverywhere(
            f"No operating point gives a positive key rate ({objective.evaluations} evaluated)"
        )
    logger.info(f"Optimised R={best_rate:.4e} after {objective.evaluations} evaluations")
    return OptimizationResult(
        best=best,
        report=objective.report(best),
        evaluations=objective.evaluations,
        starts=starts,
    )
