"""
Report rendering.
Text derivation traces, qnet.report/1 documents and sweep CSV files.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from src.core.keyrate import KeyRateReport
from src.formats.records import SCHEMAS, PathLike, dump_document

logger = logging.getLogger(__name__)

# Modelling decisions in effect, embedded in every report
LEDGER = {
    'D1': 'sent pairing counts for all nine categories are per-user probability products',
    'D2': 'chernoff: phiU=x+b/2+sqrt(2bx+b^2/4), phiL=max(0,x-sqrt(2bx)), '
          'EU=k+b+sqrt(2bk+b^2), EL=max(0,k-sqrt(2bk)), b=ln(1/eps)',
    'D3': 'subtracted yields and T_x use upper bounds, added yields and S_oo use lower bounds',
    'D4': 'N_x counts sent xx pairings passing the phase filter; without a tallied N_x the accepted share of xx detections is used, 1/8 when none',
    'D5': "n_g counts AOPP pairs, n_t' their survivors, E' the survivor error rate; from bit-level AOPP or ingested measurements",
    'D6': 'yields clamped to [0, 1], counts to >= 0; every clamp is listed',
    'D7': 'bit/s = R * clock_hz * signal_duty (defaults 1e8 Hz, 400/1024)',
    'D8': 'interference click model with visibility on the cross term',
    'D9': 'residual phase compensated to 0 unless residual_phase_std > 0',
    'D10': 'AOPP: random grouping for n_odd, active odd-parity pairing for survivors',
    'D11': 'expected mode samples AOPP on a proportional raw-key sub-sample',
    'D12': 'unit excess loss 10log10(i) + stage_excess_db * ceil(log2 i)',
    'D13': "detected labels 'ijab' aggregate to intensity pairs per the ingestion map",
    'D14': 'port constraint inclusive (<=) with a warning at equality; strict mode by flag',
    'D15': 'pairs per unit capped at C(n, 2)',
    'D16': 'scheduling exact up to 12 users, greedy largest unit first beyond',
    'D17': 'coarse grid then coordinate descent with halving steps',
    'D18': 'JSON documents with schema tags, CSV for sweeps',
    'D19': 'reports embed this ledger',
    'D20': 'simulation presets use mu_o = 0; a given mu_o is honoured',
    'D21': 'distance_km is the user-to-user length split evenly between the arms; sweep loss_db applies to each arm',
    'D22': 'each user is routed to a single unit',
    'D23': 'capacity oracle admits i = 1 for n > 2; inventories require i >= 2',
    'D24': "ingestion maps 'decoy-window-vacuum' (default) and 'separate-vacuum-window'",
    'D25': 'the optimizer always evaluates the recorded reference operating points alongside its own search',
    'D26': 'table2 exits 0 and reports feasibility per row',
}

SWEEP_COLUMNS = ('loss_db', 'km', 'R_per_pulse', 'R_bps', 'e1ph', 'n1_prime', 'feasible')


def _line(name: str, value: Any) -> str:
    if isinstance(value, float):
        return f"  {name:<22} {value:.6e}"
    return f"  {name:<22} {value}"


def render_trace(report: KeyRateReport, title: Optional[str] = None) -> str:
    """
    Human-readable derivation trace of a key-rate evaluation.

    Args:
        report: Key-rate report
        title: Optional heading

    Returns:
        Multi-line text with every intermediate that was computed
    """
    lines = [title] if title else []
    if report.decoy is not None:
        lines.append('Decoy bounds:')
        for name, value in report.decoy.to_dict().items():
            if name in ('yields', 'clamps'):
                continue
            lines.append(_line(name, value))
        for name, value in sorted(report.decoy.yields.items()):
            lines.append(_line(name, value))
    if report.aopp is not None:
        lines.append('AOPP estimate:')
        for name, value in report.aopp.to_dict().items():
            if name != 'clamps':
                lines.append(_line(name, value))
    if report.terms:
        lines.append('Rate terms:')
        for name, value in report.terms.items():
            lines.append(_line(name, value))
    if report.clamps:
        lines.append('Clamps:')
        lines.extend(f"  {note}" for note in report.clamps)
    lines.append('Result:')
    lines.append(_line('feasible', report.feasible))
    if report.guard:
        lines.append(_line('guard', report.guard))
    lines.append(_line('R (bit/pulse)', report.rate_per_pulse))
    lines.append(_line('R (bit/s)', report.rate_bps))
    return '\n'.join(lines) + '\n'


def ledger_document(kind: str, body: Dict[str, Any], inputs: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """qnet.report/1 document of any command, with the ledger embedded."""
    return {
        'schema': SCHEMAS['report'],
        'kind': kind,
        'ledger': dict(LEDGER),
        'inputs': dict(inputs or {}),
        **body,
    }


def report_document(
    report: KeyRateReport,
    inputs: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """qnet.report/1 document of a key-rate evaluation."""
    body = {'report': report.to_dict()}
    body.update(extra or {})
    return ledger_document('keyrate', body, inputs)


def write_document(document: Dict[str, Any], path: PathLike) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_document(document), encoding='utf-8')
    logger.info(f"Wrote {document.get('schema', 'document')} to {path}")


def sweep_row(report: KeyRateReport, loss_db: Optional[float], km: Optional[float]) -> Dict[str, Any]:
    aopp = report.aopp
    return {
        'loss_db': loss_db,
        'km': km,
        'R_per_pulse': report.rate_per_pulse,
        'R_bps': report.rate_bps,
        'e1ph': aopp.e1ph_prime if aopp is not None else None,
        'n1_prime': aopp.n1_prime if aopp is not None else None,
        'feasible': report.feasible,
    }


def write_sweep_csv(rows: Iterable[Dict[str, Any]], path: PathLike, sort_by: str = 'loss_db') -> List[Dict[str, Any]]:
    """
    Write sweep rows sorted by the swept column.

    Returns:
        The rows in the order written
    """
    ordered = sorted(rows, key=lambda r: (r.get(sort_by) is None, r.get(sort_by) or 0.0))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(SWEEP_COLUMNS)
        for row in ordered:
            writer.writerow(['' if row.get(c) is None else row[c] for c in SWEEP_COLUMNS])
    logger.info(f"Wrote {len(ordered)} sweep rows to {path}")
    return ordered


def write_table_csv(rows: List[Dict[str, Any]], path: PathLike) -> None:
    """Generic CSV for list-of-dict tables (network surfaces, capacity rows)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0].keys()) if rows else []
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
