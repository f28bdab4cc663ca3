"""
Per-pulse Monte-Carlo of a key session.
Samples source choices, slice phases and detector clicks pulse by pulse and
accumulates the detection tally and the signal-window raw key in chunks.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.decoy import window_probabilities
from src.core.exceptions import InvalidParameters
from src.core.params import ProtocolParams
from src.detection.detector import ChannelSpec, PhaseFilter, click_probabilities
from src.detection.events import (
    DEFAULT_INGESTION_MAP,
    SIGNAL_LABELS,
    TABLE2_LABELS,
    DetectionTally,
    aggregate_labels,
)

logger = logging.getLogger(__name__)

# Per-user choices; index 4 * choice_i + choice_j selects the label
CHOICES = ('Xo', 'Xx', 'Zo', 'Zy')
_CHOICE_LABELS = [
    a[0] + b[0] + a[1] + b[1] for a in CHOICES for b in CHOICES
]
_LABEL_INDEX = [_CHOICE_LABELS.index(label) for label in TABLE2_LABELS]

DEFAULT_CHUNK_SIZE = 1_000_000


@dataclass
class RawKeyPair:
    """Key bits of both users over detected signal-window events."""
    bits_i: np.ndarray
    bits_j: np.ndarray

    def __post_init__(self) -> None:
        self.bits_i = np.asarray(self.bits_i, dtype=np.uint8)
        self.bits_j = np.asarray(self.bits_j, dtype=np.uint8)
        if self.bits_i.shape != self.bits_j.shape or self.bits_i.ndim != 1:
            raise InvalidParameters("Raw key bit sequences must be 1-D and of equal length")

    def __len__(self) -> int:
        return int(self.bits_i.size)

    @property
    def error_positions(self) -> np.ndarray:
        return np.flatnonzero(self.bits_i != self.bits_j)

    @property
    def qber(self) -> float:
        return float(self.error_positions.size / len(self)) if len(self) else 0.0

    @staticmethod
    def concatenate(parts: List['RawKeyPair']) -> 'RawKeyPair':
        if not parts:
            return RawKeyPair(np.zeros(0), np.zeros(0))
        return RawKeyPair(
            np.concatenate([p.bits_i for p in parts]),
            np.concatenate([p.bits_j for p in parts])
        )


@dataclass(frozen=True)
class PhotonTruth:
    """
    Realised single-photon events of signal-window pulses with one sender.

    The '10' events have user i sending exactly one photon and user j none;
    '01' is the mirror case. ``detected`` counts those giving a single
    detector response.
    """
    sent_10: int = 0
    detected_10: int = 0
    sent_01: int = 0
    detected_01: int = 0

    @classmethod
    def from_array(cls, values: np.ndarray) -> 'PhotonTruth':
        return cls(*(int(v) for v in values))

    def __add__(self, other: 'PhotonTruth') -> 'PhotonTruth':
        return PhotonTruth(
            self.sent_10 + other.sent_10,
            self.detected_10 + other.detected_10,
            self.sent_01 + other.sent_01,
            self.detected_01 + other.detected_01,
        )

    @property
    def yield_10(self) -> float:
        return self.detected_10 / self.sent_10 if self.sent_10 else 0.0

    @property
    def yield_01(self) -> float:
        return self.detected_01 / self.sent_01 if self.sent_01 else 0.0

    def to_dict(self) -> Dict[str, float]:
        return {**asdict(self), 'yield_10': self.yield_10, 'yield_01': self.yield_01}


def _chunk(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    size: int,
    rng: np.random.Generator
) -> Tuple[Dict[str, np.ndarray], RawKeyPair]:
    single = window_probabilities(params)
    weights = np.array([single[c] for c in CHOICES])
    weights = weights / weights.sum()
    intensities = np.array([params.intensity(c[1]) for c in CHOICES])

    choice_i = rng.choice(4, size=size, p=weights)
    choice_j = rng.choice(4, size=size, p=weights)
    slice_i = rng.integers(filt.slices, size=size)
    slice_j = rng.integers(filt.slices, size=size)
    announced = filt.phase(slice_i - slice_j)
    delta = announced
    if ch.residual_phase_std > 0:
        delta = announced + rng.normal(0.0, ch.residual_phase_std, size=size)

    p_d0, p_d1 = click_probabilities(intensities[choice_i], intensities[choice_j], delta, ch)
    click_d0 = rng.random(size) < p_d0
    click_d1 = rng.random(size) < p_d1

    # Signal window with one sender: resolve photon numbers, then split the
    # arriving photons evenly over the detectors. Exact when the quiet
    # source is vacuum.
    lone = (choice_i >= 2) & (choice_j >= 2) & ((choice_i == 3) != (choice_j == 3))
    count = int(lone.sum())
    photons_i = rng.poisson(intensities[choice_i[lone]])
    photons_j = rng.poisson(intensities[choice_j[lone]])
    arrived = rng.binomial(photons_i, ch.transmittance('i')) \
        + rng.binomial(photons_j, ch.transmittance('j'))
    to_d0 = rng.binomial(arrived, 0.5)
    click_d0[lone] = (to_d0 > 0) | (rng.random(count) < ch.dark_count)
    click_d1[lone] = (arrived > to_d0) | (rng.random(count) < ch.dark_count)
    single_click = click_d0 ^ click_d1

    lone_single = single_click[lone]
    sender_i = choice_i[lone] == 3
    untagged_10 = sender_i & (photons_i == 1) & (photons_j == 0)
    untagged_01 = ~sender_i & (photons_j == 1) & (photons_i == 0)

    code = 4 * choice_i + choice_j
    stats = {
        'sent': np.bincount(code, minlength=16),
        'detected': np.bincount(code[single_click], minlength=16),
    }

    xx = (choice_i == 1) & (choice_j == 1)
    passing = xx & filt.passes(announced, 0.0)
    accepted = passing & single_click
    expected = filt.expected_detector(announced, 0.0)
    clicked = np.where(click_d0, 0, 1)
    stats['xx'] = np.array([
        passing.sum(), accepted.sum(), (accepted & (clicked == expected)).sum()
    ])
    stats['untagged'] = np.array([
        untagged_10.sum(), (untagged_10 & lone_single).sum(),
        untagged_01.sum(), (untagged_01 & lone_single).sum(),
    ])

    # Signal window for both users: user i sends -> 1, user j sends -> 0
    key = single_click & (choice_i >= 2) & (choice_j >= 2)
    raw = RawKeyPair(
        bits_i=(choice_i[key] == 3).astype(np.uint8),
        bits_j=(choice_j[key] != 3).astype(np.uint8),
    )
    return stats, raw


def _shard(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    pulses: int,
    seed_seq: np.random.SeedSequence,
    chunk_size: int
) -> Tuple[Dict[str, np.ndarray], RawKeyPair]:
    """Worker body: one seed-disjoint block of pulses."""
    rng = np.random.default_rng(seed_seq)
    totals = {'sent': np.zeros(16, dtype=np.int64),
              'detected': np.zeros(16, dtype=np.int64),
              'xx': np.zeros(3, dtype=np.int64),
              'untagged': np.zeros(4, dtype=np.int64)}
    keys = []
    done = 0
    while done < pulses:
        size = min(chunk_size, pulses - done)
        stats, raw = _chunk(params, ch, filt, size, rng)
        for name in totals:
            totals[name] += stats[name]
        keys.append(raw)
        done += size
        logger.debug(f"Monte-Carlo progress: {done}/{pulses} pulses")
    return totals, RawKeyPair.concatenate(keys)


def _to_tally(totals: Dict[str, np.ndarray], N: int, mapping: str) -> DetectionTally:
    sent = {label: float(totals['sent'][idx]) for label, idx in zip(TABLE2_LABELS, _LABEL_INDEX)}
    detected = {label: float(totals['detected'][idx]) for label, idx in zip(TABLE2_LABELS, _LABEL_INDEX)}
    sent_accepted, accepted, correct = (float(v) for v in totals['xx'])
    return DetectionTally(
        total_pulses=N,
        counts=aggregate_labels(detected, mapping),
        xx_accepted=accepted,
        xx_correct=correct,
        xx_sent_accepted=sent_accepted,
        sent_pairs=aggregate_labels(sent, mapping),
        signal_counts={category: detected[label] for label, category in SIGNAL_LABELS.items()},
        labels=detected,
        ingestion_map=mapping,
    )


def monte_carlo_session_with_truth(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: int,
    seed: Optional[int] = None,
    mapping: str = DEFAULT_INGESTION_MAP,
    shards: int = 1,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Tuple[RawKeyPair, DetectionTally, PhotonTruth]:
    """
    Simulate N pulse pairs; raw key, detection tally and realised single-photon events.

    The pulses are split into ``shards`` blocks seeded from
    ``SeedSequence(seed).spawn``; results depend on seed and shard count only,
    not on the number of workers.

    Args:
        params: Protocol parameters
        ch: Channel and detector description
        filt: Decoy-window phase filter
        N: Pulse pairs to simulate
        seed: Master seed
        mapping: Label-to-pairing ingestion map
        shards: Number of seed-disjoint blocks
        workers: Worker processes used for the blocks
        chunk_size: Pulses sampled per vectorised step

    Returns:
        Tuple (RawKeyPair, DetectionTally, PhotonTruth)
    """
    N = int(N)
    if N <= 0:
        raise InvalidParameters(f"Pulse count must be positive, got {N}")
    if shards < 1 or chunk_size < 1:
        raise InvalidParameters("shards and chunk_size must be >= 1")

    children = np.random.SeedSequence(seed).spawn(shards)
    sizes = [N // shards + (1 if k < N % shards else 0) for k in range(shards)]

    if workers > 1 and shards > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_shard, params, ch, filt, size, child, chunk_size)
                for size, child in zip(sizes, children)
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _shard(params, ch, filt, size, child, chunk_size)
            for size, child in zip(sizes, children)
        ]

    tally = None
    for size, (totals, _) in zip(sizes, results):
        part = _to_tally(totals, size, mapping)
        tally = part if tally is None else tally.merge(part)
    raw = RawKeyPair.concatenate([key for _, key in results])
    truth = sum((PhotonTruth.from_array(totals['untagged']) for totals, _ in results), PhotonTruth())

    logger.info(f"Monte-Carlo session: N={N}, n_t={len(raw)}, QBER={raw.qber:.4f}")
    return raw, tally, truth


def monte_carlo_session(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: int,
    seed: Optional[int] = None,
    mapping: str = DEFAULT_INGESTION_MAP,
    shards: int = 1,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK_SIZE
) -> Tuple[RawKeyPair, DetectionTally]:
    """Simulate N pulse pairs and return the raw key and the detection tally."""
    raw, tally, _ = monte_carlo_session_with_truth(
        params, ch, filt, N, seed, mapping, shards, workers, chunk_size
    )
    return raw, tally


def synthetic_raw_key(
    signal_counts: Dict[tuple, float],
    size: Optional[int] = None,
    seed: Optional[int] = None
) -> RawKeyPair:
    """
    Raw key realising given signal-window outcome counts.

    Args:
        signal_counts: Counts keyed by (intensity_i, intensity_j) over the
            four signal-window outcomes
        size: Key length; defaults to the rounded total, otherwise the
            outcomes are drawn multinomially in the given proportions
        seed: Seed for the draw and the shuffle

    Returns:
        RawKeyPair in random order
    """
    rng = np.random.default_rng(seed)
    outcomes = list(SIGNAL_LABELS.values())
    values = np.array([max(0.0, float(signal_counts.get(o, 0.0))) for o in outcomes])
    total = values.sum()
    if size is None:
        counts = np.rint(values).astype(np.int64)
    elif total <= 0 or size <= 0:
        counts = np.zeros(len(outcomes), dtype=np.int64)
    else:
        counts = rng.multinomial(int(size), values / total)

    bits_i = np.concatenate([
        np.full(n, 1 if o[0] == 'y' else 0, dtype=np.uint8) for o, n in zip(outcomes, counts)
    ])
    bits_j = np.concatenate([
        np.full(n, 0 if o[1] == 'y' else 1, dtype=np.uint8) for o, n in zip(outcomes, counts)
    ])
    order = rng.permutation(bits_i.size)
    return RawKeyPair(bits_i[order], bits_j[order])
