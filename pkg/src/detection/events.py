"""
Detection tally data structures.
Defines the per-category single-detector response counts that feed the
decoy analysis, and the mapping from experiment labels to source pairings.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from src.core.exceptions import InvalidParameters

logger = logging.getLogger(__name__)

Category = Tuple[str, str]

# Row order of the published detection table: windows (Z/X) then intensities
TABLE2_LABELS = (
    'ZZyy', 'ZZoy', 'ZZyo', 'ZZoo',
    'ZXyx', 'ZXox', 'ZXyo', 'ZXoo',
    'XZxy', 'XZoy', 'XZxo', 'XZoo',
    'XXxx', 'XXox', 'XXxo', 'XXoo',
)

CATEGORIES: Tuple[Category, ...] = (
    ('o', 'o'), ('o', 'x'), ('x', 'o'), ('o', 'y'), ('y', 'o'),
    ('x', 'x'), ('x', 'y'), ('y', 'x'), ('y', 'y'),
)

# Both users in the signal window: the raw-key outcomes
SIGNAL_LABELS: Dict[str, Category] = {
    'ZZoo': ('o', 'o'), 'ZZoy': ('o', 'y'), 'ZZyo': ('y', 'o'), 'ZZyy': ('y', 'y'),
}

DEFAULT_INGESTION_MAP = 'decoy-window-vacuum'

INGESTION_MAPS: Dict[str, Dict[str, Category]] = {
    # Vacuum counted from the X window and from the partner's Z-window not-sending
    'decoy-window-vacuum': {
        'XXoo': ('o', 'o'), 'ZXoo': ('o', 'o'), 'XZoo': ('o', 'o'),
        'XXox': ('o', 'x'), 'ZXox': ('o', 'x'),
        'XXxo': ('x', 'o'), 'XZxo': ('x', 'o'),
        'XZoy': ('o', 'y'), 'ZXyo': ('y', 'o'),
        'XXxx': ('x', 'x'), 'XZxy': ('x', 'y'), 'ZXyx': ('y', 'x'),
        'ZZyy': ('y', 'y'),
    },
    # Vacuum counted only when drawn inside the X window
    'separate-vacuum-window': {
        'XXoo': ('o', 'o'), 'XXox': ('o', 'x'), 'XXxo': ('x', 'o'),
        'XZoy': ('o', 'y'), 'ZXyo': ('y', 'o'),
        'XXxx': ('x', 'x'), 'XZxy': ('x', 'y'), 'ZXyx': ('y', 'x'),
        'ZZyy': ('y', 'y'),
    },
}

# Slack for float tallies produced in expected-value mode
_COUNT_SLACK = 1e-6


def category_key(category: Category) -> str:
    """'oy'-style string key of an intensity pairing."""
    return f"{category[0]}{category[1]}"


def parse_category(key: str) -> Category:
    if len(key) != 2 or key[0] not in 'oxy' or key[1] not in 'oxy':
        raise InvalidParameters(f"Unknown intensity pairing '{key}'")
    return key[0], key[1]


def aggregate_labels(
    labels: Mapping[str, float],
    mapping: str = DEFAULT_INGESTION_MAP
) -> Dict[Category, float]:
    """Sum experiment-label counts into the nine intensity pairings."""
    if mapping not in INGESTION_MAPS:
        raise InvalidParameters(f"Unknown ingestion map '{mapping}'")
    table = INGESTION_MAPS[mapping]
    counts = {category: 0.0 for category in CATEGORIES}
    for label, value in labels.items():
        if label not in TABLE2_LABELS:
            raise InvalidParameters(f"Unknown detection label '{label}'")
        if label in table:
            counts[table[label]] += value
    return counts


@dataclass
class DetectionTally:
    """Single-detector response statistics of one key session."""
    total_pulses: float
    counts: Dict[Category, float]
    xx_accepted: float = 0.0
    xx_correct: float = 0.0
    xx_sent_accepted: Optional[float] = None
    sent_pairs: Optional[Dict[Category, float]] = None
    signal_counts: Dict[Category, float] = field(default_factory=dict)
    labels: Optional[Dict[str, float]] = None
    ingestion_map: str = DEFAULT_INGESTION_MAP

    def __post_init__(self) -> None:
        self.counts = {c: float(self.counts.get(c, 0.0)) for c in CATEGORIES}
        self.signal_counts = {
            c: float(self.signal_counts.get(c, 0.0)) for c in SIGNAL_LABELS.values()
        }
        if self.sent_pairs is not None:
            self.sent_pairs = {c: float(self.sent_pairs.get(c, 0.0)) for c in CATEGORIES}
        self.validate()

    @classmethod
    def from_labels(
        cls,
        total_pulses: float,
        labels: Mapping[str, float],
        xx_accepted: float,
        xx_correct: float,
        xx_sent_accepted: Optional[float] = None,
        sent_labels: Optional[Mapping[str, float]] = None,
        mapping: str = DEFAULT_INGESTION_MAP
    ) -> 'DetectionTally':
        """Build a tally from "Detected-ijab" label counts."""
        full = {label: float(labels.get(label, 0.0)) for label in TABLE2_LABELS}
        sent = aggregate_labels(sent_labels, mapping) if sent_labels is not None else None
        return cls(
            total_pulses=total_pulses,
            counts=aggregate_labels(full, mapping),
            xx_accepted=xx_accepted,
            xx_correct=xx_correct,
            xx_sent_accepted=xx_sent_accepted,
            sent_pairs=sent,
            signal_counts={cat: full[label] for label, cat in SIGNAL_LABELS.items()},
            labels=full,
            ingestion_map=mapping
        )

    def validate(self) -> None:
        """
        Check tally invariants.

        Raises:
            InvalidParameters: If a count is negative or exceeds its bound
        """
        values = [self.total_pulses, self.xx_accepted, self.xx_correct]
        values += list(self.counts.values()) + list(self.signal_counts.values())
        if self.xx_sent_accepted is not None:
            values.append(self.xx_sent_accepted)
        for value in values:
            if not math.isfinite(value) or value < 0:
                raise InvalidParameters(f"Tally counts must be non-negative, got {value}")
        if self.xx_correct > self.xx_accepted + _COUNT_SLACK:
            raise InvalidParameters("xx_correct exceeds xx_accepted")
        if self.xx_accepted > self.counts[('x', 'x')] + _COUNT_SLACK:
            raise InvalidParameters("xx_accepted exceeds the xx detection count")
        if self.sent_pairs is not None:
            for category, sent in self.sent_pairs.items():
                if self.counts[category] > sent * (1 + _COUNT_SLACK) + _COUNT_SLACK:
                    raise InvalidParameters(
                        f"n_{category_key(category)} exceeds its sent pairings"
                    )
            if sum(self.sent_pairs.values()) > self.total_pulses * (1 + _COUNT_SLACK):
                raise InvalidParameters("Sent pairings exceed the total pulse count")

    @property
    def raw_key_length(self) -> float:
        """n_t: detections with both users in the signal window."""
        return sum(self.signal_counts.values())

    @property
    def signal_errors(self) -> float:
        """Signal-window detections where both or neither user sent."""
        return self.signal_counts[('o', 'o')] + self.signal_counts[('y', 'y')]

    @property
    def qber(self) -> float:
        n_t = self.raw_key_length
        return self.signal_errors / n_t if n_t > 0 else 0.0

    def merge(self, other: 'DetectionTally') -> 'DetectionTally':
        """Sum two tallies of disjoint pulse sets (associative and commutative)."""
        if other.ingestion_map != self.ingestion_map:
            raise InvalidParameters("Cannot merge tallies with different ingestion maps")

        def add(a: Optional[Dict], b: Optional[Dict]) -> Optional[Dict]:
            if a is None or b is None:
                return None
            return {key: a.get(key, 0.0) + b.get(key, 0.0) for key in set(a) | set(b)}

        def add_optional(a: Optional[float], b: Optional[float]) -> Optional[float]:
            return None if a is None or b is None else a + b

        return DetectionTally(
            total_pulses=self.total_pulses + other.total_pulses,
            counts=add(self.counts, other.counts),
            xx_accepted=self.xx_accepted + other.xx_accepted,
            xx_correct=self.xx_correct + other.xx_correct,
            xx_sent_accepted=add_optional(self.xx_sent_accepted, other.xx_sent_accepted),
            sent_pairs=add(self.sent_pairs, other.sent_pairs),
            signal_counts=add(self.signal_counts, other.signal_counts),
            labels=add(self.labels, other.labels),
            ingestion_map=self.ingestion_map
        )

    def to_dict(self) -> dict:
        """Convert tally to dictionary format for logging/storage."""
        return {
            'total_pulses': self.total_pulses,
            'counts': {category_key(c): v for c, v in self.counts.items()},
            'sent_pairs': (
                {category_key(c): v for c, v in self.sent_pairs.items()}
                if self.sent_pairs is not None else None
            ),
            'signal_counts': {category_key(c): v for c, v in self.signal_counts.items()},
            'xx_accepted': self.xx_accepted,
            'xx_correct': self.xx_correct,
            'xx_sent_accepted': self.xx_sent_accepted,
            'labels': dict(self.labels) if self.labels is not None else None,
            'ingestion_map': self.ingestion_map,
        }
