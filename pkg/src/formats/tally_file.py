"""
Tally file format (qnet.tally/1).

Example::

    {
      "schema": "qnet.tally/1",
      "metadata": {"pair": "2-3", "loss_db": 20, "printed_rate": 2.02e-05},
      "total_pulses": 1e10,
      "ingestion_map": "decoy-window-vacuum",
      "counts": {"ZZyy": 3645054, "ZZoy": 5217181, ...},
      "xx_accepted": 20232,
      "xx_correct": 18694,
      "measured": {"qber_before": 0.2464, "qber_after": 0.0116}
    }

``counts`` is keyed by the detection labels "ijab". ``sent_pairs`` (keyed
by pairings such as "oy"), ``xx_sent_accepted`` and the AOPP fields of
``measured`` are optional.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

from src.core.exceptions import InfeasibleBounds, InputFormatError, InvalidParameters
from src.core.params import AoppMeasurement
from src.detection.events import (
    CATEGORIES,
    DEFAULT_INGESTION_MAP,
    INGESTION_MAPS,
    TABLE2_LABELS,
    DetectionTally,
    category_key,
    parse_category,
)
from src.formats.records import (
    SCHEMAS,
    PathLike,
    check_keys,
    dump_document,
    locate,
    number,
    parse_document,
    read_text,
)
from src.simulation.montecarlo import synthetic_raw_key
from src.simulation.postprocessing import aopp_bitlevel

logger = logging.getLogger(__name__)

TOP_KEYS = (
    'metadata', 'total_pulses', 'ingestion_map', 'counts', 'sent_pairs',
    'xx_accepted', 'xx_correct', 'xx_sent_accepted', 'measured',
)
MEASURED_KEYS = ('qber_before', 'qber_after', 'n_t', 'n_g', 'n_odd', 'n_t_prime', 'E_prime')
AOPP_KEYS = ('n_t', 'n_g', 'n_odd', 'n_t_prime', 'E_prime')


@dataclass
class TallyFile:
    """A detection tally with its metadata and measured post-processing figures."""
    tally: DetectionTally
    metadata: Dict[str, Any] = field(default_factory=dict)
    measured: Dict[str, float] = field(default_factory=dict)

    @property
    def aopp(self) -> Optional[AoppMeasurement]:
        """Recorded AOPP statistics, when the file carries all of them."""
        if all(key in self.measured for key in AOPP_KEYS):
            return AoppMeasurement(**{key: self.measured[key] for key in AOPP_KEYS})
        return None


def _count_map(section: Any, name: str, keys, text: str, path: Optional[PathLike]) -> Dict[str, float]:
    if not isinstance(section, dict):
        line, column = locate(text, name)
        raise InputFormatError(f"'{name}' must be an object", path, line, column, name)
    check_keys(section, keys, (), text, path, name)
    return {key: number(section, key, text, path) for key in section}


def parse_tally(text: str, path: Optional[PathLike] = None) -> TallyFile:
    """
    Parse a tally document.

    Raises:
        InputFormatError: On malformed JSON, unknown keys or invalid counts
    """
    document = parse_document(text, SCHEMAS['tally'], path)
    check_keys(document, TOP_KEYS, ('total_pulses', 'counts'), text, path)

    mapping = document.get('ingestion_map', DEFAULT_INGESTION_MAP)
    if mapping not in INGESTION_MAPS:
        line, column = locate(text, 'ingestion_map')
        raise InputFormatError(f"Unknown ingestion map {mapping!r}", path, line, column, 'ingestion_map')

    labels = _count_map(document['counts'], 'counts', TABLE2_LABELS, text, path)
    sent = None
    if 'sent_pairs' in document:
        raw = _count_map(document['sent_pairs'], 'sent_pairs',
                         [category_key(c) for c in CATEGORIES], text, path)
        sent = {parse_category(key): value for key, value in raw.items()}

    metadata = document.get('metadata', {})
    if not isinstance(metadata, dict):
        line, column = locate(text, 'metadata')
        raise InputFormatError("'metadata' must be an object", path, line, column, 'metadata')
    measured = {}
    if 'measured' in document:
        measured = _count_map(document['measured'], 'measured', MEASURED_KEYS, text, path)

    try:
        tally = DetectionTally.from_labels(
            total_pulses=number(document, 'total_pulses', text, path),
            labels=labels,
            xx_accepted=number(document, 'xx_accepted', text, path, default=0.0),
            xx_correct=number(document, 'xx_correct', text, path, default=0.0),
            xx_sent_accepted=number(document, 'xx_sent_accepted', text, path),
            mapping=mapping,
        )
        if sent is not None:
            tally.sent_pairs = {c: float(sent.get(c, 0.0)) for c in CATEGORIES}
            tally.validate()
    except InvalidParameters as e:
        raise InputFormatError(str(e), path) from e
    return TallyFile(tally=tally, metadata=metadata, measured=measured)


def tally_document(tally_file: TallyFile) -> Dict[str, Any]:
    """Serialise a tally file; parse_tally(dump) reproduces it exactly."""
    tally = tally_file.tally
    if tally.labels is None:
        raise InvalidParameters("Only label-resolved tallies can be written")
    document: Dict[str, Any] = {
        'schema': SCHEMAS['tally'],
        'metadata': dict(tally_file.metadata),
        'total_pulses': tally.total_pulses,
        'ingestion_map': tally.ingestion_map,
        'counts': {label: tally.labels[label] for label in TABLE2_LABELS},
        'xx_accepted': tally.xx_accepted,
        'xx_correct': tally.xx_correct,
    }
    if tally.xx_sent_accepted is not None:
        document['xx_sent_accepted'] = tally.xx_sent_accepted
    if tally.sent_pairs is not None:
        document['sent_pairs'] = {category_key(c): v for c, v in tally.sent_pairs.items()}
    if tally_file.measured:
        document['measured'] = dict(tally_file.measured)
    return document


def load_tally(path: PathLike) -> TallyFile:
    result = parse_tally(read_text(path), path)
    logger.info(f"Loaded tally {path}: n_t={result.tally.raw_key_length:.0f}")
    return result


def save_tally(tally_file: TallyFile, path: PathLike) -> None:
    Path(path).write_text(dump_document(tally_document(tally_file)), encoding='utf-8')


def resolve_measurement(tally_file: TallyFile, seed: Optional[int] = 0) -> AoppMeasurement:
    """
    AOPP statistics for an ingested tally.

    Recorded n_t, n_g, n_odd, n_t' and E' are used as they are. Otherwise a
    raw key realising the tally's signal-window counts is rebuilt and put
    through bit-level AOPP; a recorded ``qber_after`` replaces the simulated E'.

    Raises:
        InfeasibleBounds: If the tally holds fewer than two raw-key bits
    """
    recorded = tally_file.aopp
    if recorded is not None:
        return recorded
    raw = synthetic_raw_key(tally_file.tally.signal_counts, seed=seed)
    if len(raw) < 2:
        raise InfeasibleBounds('n_t <= 0')
    measured = aopp_bitlevel(raw, seed=seed)
    if 'qber_after' in tally_file.measured:
        measured = replace(measured, E_prime=tally_file.measured['qber_after'])
    logger.debug(f"Reconstructed AOPP statistics: {measured.to_dict()}")
    return measured
