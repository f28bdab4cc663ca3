"""
JSON input records.
Versioned documents for protocol, security, channel, inventory and request
inputs, with position-aware diagnostics for malformed files.
"""

import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from src.core.exceptions import InputFormatError, InvalidParameters
from src.core.params import ProtocolParams, SecurityParams
from src.detection.detector import ChannelSpec
from src.network.capacity import MuInventory

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SCHEMAS = {
    'params': 'qnet.params/1',
    'security': 'qnet.security/1',
    'channel': 'qnet.channel/1',
    'inventory': 'qnet.inventory/1',
    'requests': 'qnet.requests/1',
    'tally': 'qnet.tally/1',
    'report': 'qnet.report/1',
}


def locate(text: str, key: str) -> Tuple[Optional[int], Optional[int]]:
    """Line and column (1-based) of the first occurrence of a JSON key."""
    match = re.search(r'"%s"\s*:' % re.escape(key), text)
    if match is None:
        return None, None
    line = text.count('\n', 0, match.start()) + 1
    column = match.start() - (text.rfind('\n', 0, match.start()) + 1) + 1
    return line, column


def parse_document(text: str, schema: str, path: Optional[PathLike] = None) -> Dict[str, Any]:
    """
    Decode a JSON document and check its schema tag.

    Raises:
        InputFormatError: On syntax errors, a non-object root or a wrong schema
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputFormatError(e.msg, path, e.lineno, e.colno) from e
    if not isinstance(document, dict):
        raise InputFormatError("Document root must be an object", path, 1, 1)
    found = document.get('schema')
    if found != schema:
        line, column = locate(text, 'schema')
        raise InputFormatError(
            f"Expected schema '{schema}', found {found!r}", path, line, column, 'schema'
        )
    return document


def check_keys(
    document: Dict[str, Any],
    allowed: Iterable[str],
    required: Iterable[str],
    text: str,
    path: Optional[PathLike] = None,
    section: Optional[str] = None
) -> None:
    """Reject unknown keys and report missing ones with their position."""
    allowed = set(allowed) | ({'schema'} if section is None else set())
    for key in document:
        if key not in allowed:
            line, column = locate(text, key)
            where = f"{section}.{key}" if section else key
            raise InputFormatError(f"Unknown key '{key}'", path, line, column, where)
    for key in required:
        if key not in document:
            where = f"{section}.{key}" if section else key
            raise InputFormatError(f"Missing required key '{key}'", path, field=where)


def number(
    document: Dict[str, Any],
    key: str,
    text: str,
    path: Optional[PathLike] = None,
    default: Optional[float] = None
) -> Optional[float]:
    """A finite numeric field."""
    value = document.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        line, column = locate(text, key)
        raise InputFormatError(f"Field must be a finite number, got {value!r}", path, line, column, key)
    return value


def read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InputFormatError(f"Cannot read file: {e.strerror}", path) from e


def dump_document(document: Dict[str, Any]) -> str:
    return json.dumps(document, indent=2) + '\n'


def _build(factory, path: Optional[PathLike], **values):
    try:
        return factory(**values)
    except InvalidParameters as e:
        raise InputFormatError(str(e), path) from e


PARAM_KEYS = ('mu_o', 'mu_x', 'mu_y', 'p_o', 'p_x', 'p_y', 'eps_send', 'mu_ref', 'loss_db')


def parse_params(text: str, path: Optional[PathLike] = None) -> ProtocolParams:
    """qnet.params/1: intensities and window probabilities (p_o optional)."""
    document = parse_document(text, SCHEMAS['params'], path)
    check_keys(document, PARAM_KEYS, ('mu_x', 'mu_y', 'p_x', 'p_y', 'eps_send'), text, path)
    values = {k: number(document, k, text, path) for k in PARAM_KEYS if k in document}
    values.pop('loss_db', None)
    values.setdefault('mu_o', 0.0)
    if 'p_o' in values:
        return _build(ProtocolParams, path, **values)
    return _build(ProtocolParams.from_windows, path, **values)


def params_document(params: ProtocolParams, loss_db: Optional[float] = None) -> Dict[str, Any]:
    document = {'schema': SCHEMAS['params'], **params.to_dict()}
    if loss_db is not None:
        document['loss_db'] = loss_db
    return document


SECURITY_KEYS = ('eps_cor', 'eps_pa', 'eps_hat', 'eps_chernoff', 'f_ec')


def parse_security(text: str, path: Optional[PathLike] = None) -> SecurityParams:
    """qnet.security/1: failure probabilities and error-correction efficiency."""
    document = parse_document(text, SCHEMAS['security'], path)
    check_keys(document, SECURITY_KEYS, (), text, path)
    values = {k: number(document, k, text, path) for k in SECURITY_KEYS if k in document}
    return _build(SecurityParams, path, **values)


CHANNEL_KEYS = (
    'loss_i_db', 'loss_j_db', 'detector_efficiency', 'dark_count', 'visibility',
    'mu_excess_loss_db', 'residual_phase_std',
)


def parse_channel(text: str, path: Optional[PathLike] = None) -> ChannelSpec:
    """qnet.channel/1: per-arm loss and detector settings."""
    document = parse_document(text, SCHEMAS['channel'], path)
    check_keys(document, CHANNEL_KEYS, ('loss_i_db', 'loss_j_db'), text, path)
    values = {k: number(document, k, text, path) for k in CHANNEL_KEYS if k in document}
    return _build(ChannelSpec, path, **values)


def channel_document(ch: ChannelSpec) -> Dict[str, Any]:
    return {'schema': SCHEMAS['channel'], **ch.to_dict()}


def parse_inventory(text: str, path: Optional[PathLike] = None) -> MuInventory:
    """
    qnet.inventory/1::

        {"schema": "qnet.inventory/1", "switch_ports": 32, "m2": 1,
         "multi": [{"n": 9, "i": 8, "count": 1}]}
    """
    document = parse_document(text, SCHEMAS['inventory'], path)
    check_keys(document, ('m2', 'multi', 'switch_ports'), ('switch_ports',), text, path)
    multi = {}
    entries = document.get('multi', [])
    if not isinstance(entries, list):
        line, column = locate(text, 'multi')
        raise InputFormatError("'multi' must be a list", path, line, column, 'multi')
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise InputFormatError("Unit entries must be objects", path, field=f"multi[{k}]")
        check_keys(entry, ('n', 'i', 'count'), ('n', 'i', 'count'), text, path, f"multi[{k}]")
        values = [entry[key] for key in ('n', 'i', 'count')]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in values):
            raise InputFormatError("n, i and count must be integers", path, field=f"multi[{k}]")
        n, i, count = values
        multi[(n, i)] = multi.get((n, i), 0) + count
    m2 = document.get('m2', 0)
    ports = document['switch_ports']
    for key, value in (('m2', m2), ('switch_ports', ports)):
        if not isinstance(value, int) or isinstance(value, bool):
            line, column = locate(text, key)
            raise InputFormatError("Field must be an integer", path, line, column, key)
    return _build(MuInventory, path, m2=m2, multi=multi, switch_ports=ports)


def inventory_document(inv: MuInventory) -> Dict[str, Any]:
    return {'schema': SCHEMAS['inventory'], **inv.to_dict()}


def parse_requests(text: str, path: Optional[PathLike] = None) -> Tuple[Optional[List[int]], List[Tuple[int, int]]]:
    """
    qnet.requests/1: ``{"users": [1, 2, 3], "pairs": [[1, 2], [2, 3]]}``.

    Returns:
        Tuple (active users or None, requested pairs)
    """
    document = parse_document(text, SCHEMAS['requests'], path)
    check_keys(document, ('users', 'pairs'), ('pairs',), text, path)
    if not isinstance(document['pairs'], list):
        line, column = locate(text, 'pairs')
        raise InputFormatError("'pairs' must be a list", path, line, column, 'pairs')
    pairs = []
    for k, pair in enumerate(document['pairs']):
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(u, int) and not isinstance(u, bool) for u in pair)):
            raise InputFormatError("Pairs must be two integer user ids", path, field=f"pairs[{k}]")
        pairs.append((pair[0], pair[1]))
    users = document.get('users')
    if users is not None and not isinstance(users, list):
        line, column = locate(text, 'users')
        raise InputFormatError("'users' must be a list", path, line, column, 'users')
    if users is not None and not all(isinstance(u, int) and not isinstance(u, bool) for u in users):
        line, column = locate(text, 'users')
        raise InputFormatError("Users must be integer ids", path, line, column, 'users')
    return users, pairs


def load(kind: str, path: PathLike):
    """Read and parse one record file of the given kind."""
    parsers = {
        'params': parse_params,
        'security': parse_security,
        'channel': parse_channel,
        'inventory': parse_inventory,
        'requests': parse_requests,
    }
    if kind not in parsers:
        raise InvalidParameters(f"Unknown record kind '{kind}'")
    result = parsers[kind](read_text(path), path)
    logger.debug(f"Loaded {kind} record from {path}")
    return result
