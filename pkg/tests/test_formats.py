import csv
import json
import tempfile
import unittest
from pathlib import Path

from src.core.exceptions import InfeasibleBounds, InputFormatError, InvalidParameters
from src.core.keyrate import KeyRateReport, infeasible_report
from src.formats.records import (
    dump_document,
    load,
    parse_channel,
    parse_inventory,
    parse_params,
    parse_requests,
)
from src.formats.reports import (
    LEDGER,
    ledger_document,
    render_trace,
    report_document,
    sweep_row,
    write_sweep_csv,
)
from src.formats.tally_file import (
    TallyFile,
    load_tally,
    parse_tally,
    resolve_measurement,
    save_tally,
    tally_document,
)
from src.detection.events import DetectionTally

DATA_DIR = Path(__file__).resolve().parents[1] / 'data'
TALLY_PATH = DATA_DIR / 'table2' / '20db_pair2-3.json'


class TestRecords(unittest.TestCase):

    def test_params_without_p_o(self):
        params = load('params', DATA_DIR / 'table1_20db.json')
        self.assertAlmostEqual(params.p_o, 0.05)
        self.assertEqual(params.mu_o, 0.0016)

    def test_unknown_key_position(self):
        text = '{\n  "schema": "qnet.params/1",\n  "mu_x": 0.01,\n  "bogus": 1\n}'
        with self.assertRaises(InputFormatError) as ctx:
            parse_params(text, 'p.json')
        self.assertEqual((ctx.exception.line, ctx.exception.column), (4, 3))
        self.assertEqual(ctx.exception.field, 'bogus')
        self.assertIn('p.json', str(ctx.exception))

    def test_wrong_schema(self):
        with self.assertRaises(InputFormatError) as ctx:
            parse_params('{"schema": "qnet.channel/1"}')
        self.assertEqual(ctx.exception.field, 'schema')

    def test_syntax_error(self):
        with self.assertRaises(InputFormatError) as ctx:
            parse_channel('{\n  "schema": "qnet.channel/1",\n  "loss_i_db": ,\n}')
        self.assertEqual(ctx.exception.line, 3)

    def test_invalid_values_are_format_errors(self):
        text = json.dumps({'schema': 'qnet.params/1', 'mu_x': 0.5, 'mu_y': 0.1,
                           'p_x': 0.2, 'p_y': 0.7, 'eps_send': 0.25})
        with self.assertRaises(InputFormatError):
            parse_params(text)
        text = json.dumps({'schema': 'qnet.channel/1', 'loss_i_db': '10', 'loss_j_db': 10})
        with self.assertRaises(InputFormatError) as ctx:
            parse_channel(text)
        self.assertEqual(ctx.exception.field, 'loss_i_db')

    def test_inventory(self):
        inv = load('inventory', DATA_DIR / 'fig4b_inventory.json')
        self.assertEqual(inv.m2, 1)
        self.assertEqual(inv.multi[(9, 8)], 1)
        text = json.dumps({'schema': 'qnet.inventory/1', 'switch_ports': 8,
                           'multi': [{'n': 4, 'i': 3, 'count': 1.5}]})
        with self.assertRaises(InputFormatError) as ctx:
            parse_inventory(text)
        self.assertEqual(ctx.exception.field, 'multi[0]')

    def test_requests(self):
        users, pairs = load('requests', DATA_DIR / 'example_requests.json')
        self.assertEqual(users, [1, 2, 3, 4, 5, 6])
        self.assertEqual(len(pairs), 7)
        with self.assertRaises(InputFormatError) as ctx:
            parse_requests(json.dumps({'schema': 'qnet.requests/1', 'pairs': [[1, 2, 3]]}))
        self.assertEqual(ctx.exception.field, 'pairs[0]')

    def test_load_errors(self):
        with self.assertRaises(InvalidParameters):
            load('tallies', TALLY_PATH)
        with self.assertRaises(InputFormatError):
            load('params', DATA_DIR / 'missing.json')


class TestTallyFile(unittest.TestCase):

    def test_round_trip(self):
        original = load_tally(TALLY_PATH)
        parsed = parse_tally(dump_document(tally_document(original)))
        self.assertEqual(parsed.tally.to_dict(), original.tally.to_dict())
        self.assertEqual(parsed.metadata, original.metadata)
        self.assertEqual(parsed.measured, original.measured)

    def test_save_and_load(self):
        original = load_tally(TALLY_PATH)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'tally.json'
            save_tally(original, path)
            self.assertEqual(load_tally(path).tally.to_dict(), original.tally.to_dict())

    def test_unknown_label(self):
        document = json.loads(TALLY_PATH.read_text())
        document['counts']['ZZqq'] = 1
        with self.assertRaises(InputFormatError) as ctx:
            parse_tally(json.dumps(document, indent=2))
        self.assertEqual(ctx.exception.field, 'counts.ZZqq')
        self.assertIsNotNone(ctx.exception.line)

    def test_unknown_ingestion_map(self):
        document = json.loads(TALLY_PATH.read_text())
        document['ingestion_map'] = 'both-windows'
        with self.assertRaises(InputFormatError) as ctx:
            parse_tally(json.dumps(document))
        self.assertEqual(ctx.exception.field, 'ingestion_map')

    def test_inconsistent_counts(self):
        document = json.loads(TALLY_PATH.read_text())
        document['xx_correct'] = document['xx_accepted'] + 1
        with self.assertRaises(InputFormatError):
            parse_tally(json.dumps(document))

    def test_reconstructed_measurement(self):
        tally_file = load_tally(TALLY_PATH)
        self.assertIsNone(tally_file.aopp)
        measured = resolve_measurement(tally_file, seed=0)
        self.assertEqual(measured.n_t, tally_file.tally.raw_key_length)
        self.assertEqual(measured.E_prime, tally_file.measured['qber_after'])
        self.assertLess(measured.n_t_prime, measured.n_g)
        self.assertLessEqual(measured.n_g, measured.n_t / 2)

    def test_recorded_measurement(self):
        tally_file = load_tally(TALLY_PATH)
        tally_file.measured.update({'n_t': 100.0, 'n_g': 30.0, 'n_odd': 25.0,
                                    'n_t_prime': 30.0, 'E_prime': 0.02})
        measured = resolve_measurement(tally_file)
        self.assertEqual(measured.n_g, 30.0)
        self.assertEqual(measured.E_prime, 0.02)

    def test_empty_raw_key(self):
        tally_file = TallyFile(tally=DetectionTally(total_pulses=1e6, counts={}))
        with self.assertRaises(InfeasibleBounds):
            resolve_measurement(tally_file)


class TestReports(unittest.TestCase):

    def setUp(self):
        self.feasible = KeyRateReport(rate_per_pulse=1.5e-5, rate_bps=585.9, feasible=True,
                                      terms={'privacy': 1e6})
        self.infeasible = infeasible_report(InfeasibleBounds('s1_lower <= 0'), 1e10)

    def test_trace(self):
        text = render_trace(self.feasible, 'Pair 1-2')
        self.assertTrue(text.startswith('Pair 1-2\n'))
        self.assertIn('Rate terms:', text)
        self.assertIn('R (bit/pulse)', text)
        text = render_trace(self.infeasible)
        self.assertIn('s1_lower <= 0', text)

    def test_documents_embed_ledger(self):
        document = report_document(self.feasible, {'tally': 'x.json'}, {'note': 'ok'})
        self.assertEqual(document['schema'], 'qnet.report/1')
        self.assertEqual(document['kind'], 'keyrate')
        self.assertEqual(document['ledger'], LEDGER)
        self.assertEqual(document['inputs'], {'tally': 'x.json'})
        self.assertEqual(document['note'], 'ok')
        self.assertEqual(ledger_document('plan', {})['kind'], 'plan')
        json.dumps(document)

    def test_sweep_csv(self):
        rows = [sweep_row(self.infeasible, 30.0, None), sweep_row(self.feasible, 10.0, None)]
        self.assertIsNone(rows[0]['e1ph'])
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'sweep.csv'
            ordered = write_sweep_csv(rows, path)
            self.assertEqual([r['loss_db'] for r in ordered], [10.0, 30.0])
            with open(path, newline='') as f:
                lines = list(csv.reader(f))
        self.assertEqual(lines[0][:2], ['loss_db', 'km'])
        self.assertEqual(lines[1][0], '10.0')
        self.assertEqual(lines[2][1], '')
        self.assertEqual(lines[2][-1], 'False')


if __name__ == '__main__':
    unittest.main()
