"""
Command-line front end for the twin-field QKD network toolkit.

Exit codes: 0 ok, 2 input error, 3 infeasible, 4 port constraint violated.
"""

import argparse
import copy
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import yaml

# Add src to Python path
src_path = Path(__file__).resolve().parent.parent
sys.path.append(str(src_path))

from src.core.exceptions import (
    ConstraintViolation,
    InfeasibleBounds,
    InfeasibleEverywhere,
    InputFormatError,
    InvalidParameters,
)
from src.core.keyrate import KeyRateReport, evaluate_key_rate, infeasible_report
from src.core.params import ProtocolParams, SecurityParams
from src.detection.detector import ChannelSpec, PhaseFilter
from src.formats import records
from src.formats.reports import (
    ledger_document,
    render_trace,
    report_document,
    sweep_row,
    write_document,
    write_sweep_csv,
    write_table_csv,
)
from src.formats.tally_file import TallyFile, load_tally, resolve_measurement, save_tally
from src.network.capacity import (
    MuInventory,
    capacity_breakdown,
    check_ports,
    ports_used,
    total_capacity,
    whatif_inventories,
)
from src.network.rate import PUBLISHED_NETWORK_RATES, active_user_sweep
from src.network.scheduler import schedule, validate_plan
from src.optimization.optimizer import KeyRateObjective, ParamBounds, optimize_params
from src.simulation.frame import FrameSpec
from src.simulation.pipeline import simulate_keyrate, simulate_session
from src.visualization.plotter import RatePlotter

logger = logging.getLogger('qnetctl')

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_CONSTRAINT = 4

CONFIG_DIR_ENV = 'QNETCTL_CONFIG_DIR'
MODES = {'expected': 'expected', 'mc': 'montecarlo', 'montecarlo': 'montecarlo'}

DEFAULT_CONFIG = {
    'protocol': {
        'mu_o': 0.0, 'mu_x': 0.01, 'mu_y': 0.44,
        'p_x': 0.23, 'p_y': 0.72, 'eps_send': 0.25, 'mu_ref': 1.5,
    },
    'security': {
        'eps_cor': 1e-10, 'eps_pa': 1e-10, 'eps_hat': 1e-10, 'eps_chernoff': 1e-10, 'f_ec': 1.1,
    },
    'channel': {
        'detector_efficiency': 0.45,
        'dark_count': 8e-8,
        'visibility': 0.95,
        'mu_excess_loss_db': 0.0,
        'residual_phase_std': 0.0,
        'loss_db_per_km': 0.2,
    },
    'filter': {
        'slices': 16,
    },
    'frame': {
        'signal': 400, 'reference': 600, 'vacuum': 24, 'clock_hz': 1e8, 'duty': None,
    },
    'simulation': {
        'mode': 'expected',
        'seed': 0,
        'pulses': 1e10,
        'aopp_sample_size': 1_000_000,
        'workers': 1,
    },
    'network': {
        'stage_excess_db': 1.0,
        'exact_limit': 12,
        'node_budget': 200_000,
        'strict_ports': False,
        'pulses': 1e11,
    },
    'optimizer': {
        'grid_points': 3,
        'tolerance': 1e-3,
        'min_step': 1e-3,
        'max_passes': 200,
        'aopp_sample_size': 200_000,
    },
    'logging': {
        'level': 'INFO',
    },
}


def load_config(config_path: Optional[str] = None) -> dict:
    """
    Load configuration from file or use defaults.

    Without ``config_path`` the file ``config.yml`` in the directory named by
    QNETCTL_CONFIG_DIR is used when it exists. Sections are merged key by key
    over the built-in defaults.

    Raises:
        InputFormatError: If the file cannot be parsed
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path is None and os.environ.get(CONFIG_DIR_ENV):
        config_path = str(Path(os.environ[CONFIG_DIR_ENV]) / 'config.yml')
    if not config_path:
        return config
    if not Path(config_path).exists():
        raise InputFormatError("Configuration file not found", config_path)

    try:
        with open(config_path, 'r') as f:
            user_config = yaml.safe_load(f) or {}
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        raise InputFormatError(
            str(e.problem), config_path,
            mark.line + 1 if mark else None, mark.column + 1 if mark else None
        ) from e
    except yaml.YAMLError as e:
        raise InputFormatError(str(e), config_path) from e
    if not isinstance(user_config, dict):
        raise InputFormatError("Configuration root must be a mapping", config_path)

    for section, values in user_config.items():
        if section not in config:
            logger.warning(f"Ignoring unknown config section '{section}'")
            continue
        if not isinstance(values, dict):
            raise InputFormatError("Section must be a mapping", config_path, field=section)
        config[section].update(values)
    return config


def _float_range(start: float, stop: float, step: float) -> List[float]:
    if step <= 0 or stop < start:
        raise InvalidParameters(f"Invalid range {start}..{stop} step {step}")
    count = int(round((stop - start) / step)) + 1
    return [float(v) for v in np.linspace(start, start + (count - 1) * step, count)]


def _mu_type(text: str) -> tuple:
    try:
        n, i = (int(part) for part in text.split(','))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"unit types are written n,i (got {text!r})") from e
    return n, i


class QNetController:
    """Coordinates configuration, simulation and reporting for every command."""

    def __init__(self, config: dict, output: Optional[str] = None):
        """Initialize the shared settings from configuration."""
        self.config = config
        self.output = output
        try:
            self._setup(config)
        except InvalidParameters:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidParameters(f"Invalid configuration: {e}") from e
        self.plotter = RatePlotter()

    def _setup(self, config: dict) -> None:
        protocol = {k: float(v) for k, v in config['protocol'].items()}
        self.params = ProtocolParams.from_windows(**protocol)
        self.sec = SecurityParams(**{k: float(v) for k, v in config['security'].items()})
        self.filt = PhaseFilter(slices=int(config['filter']['slices']))

        frame = config['frame']
        self.frame = FrameSpec(
            signal=int(frame['signal']),
            reference=int(frame['reference']),
            vacuum=int(frame['vacuum']),
            clock_hz=float(frame['clock_hz']),
            duty=None if frame.get('duty') is None else float(frame['duty']),
        )

        channel = dict(config['channel'])
        self.loss_db_per_km = float(channel.pop('loss_db_per_km'))
        self.base_channel = ChannelSpec(
            loss_i_db=0.0, loss_j_db=0.0, **{k: float(v) for k, v in channel.items()}
        )

        simulation = config['simulation']
        self.mode = MODES.get(simulation['mode'])
        if self.mode is None:
            raise InvalidParameters(f"Unknown simulation mode '{simulation['mode']}'")
        self.seed = int(simulation['seed'])
        self.workers = int(simulation['workers'])

    def _emit(self, document: dict) -> None:
        if self.output:
            write_document(document, self.output)

    def _params(self, params_path: Optional[str]) -> ProtocolParams:
        return records.load('params', params_path) if params_path else self.params

    def _security(self, sec_path: Optional[str]) -> SecurityParams:
        return records.load('security', sec_path) if sec_path else self.sec

    def cmd_keyrate(
        self,
        tally_path: str,
        params_path: Optional[str] = None,
        sec_path: Optional[str] = None
    ) -> int:
        """Evaluate the key rate of a recorded detection tally."""
        tally_file = load_tally(tally_path)
        report = self.keyrate_from_tally(tally_file, self._params(params_path), self._security(sec_path))
        print(render_trace(report, f"Key rate for {tally_path}"), end='')
        self._emit(report_document(report, {
            'tally': str(tally_path), 'params': params_path, 'security': sec_path,
            'metadata': tally_file.metadata,
        }))
        return EXIT_OK if report.feasible else EXIT_INFEASIBLE

    def keyrate_from_tally(
        self,
        tally_file: TallyFile,
        params: ProtocolParams,
        sec: SecurityParams
    ) -> KeyRateReport:
        try:
            measured = resolve_measurement(tally_file, seed=self.seed)
        except InfeasibleBounds as e:
            return infeasible_report(
                e, tally_file.tally.total_pulses,
                clock_hz=self.frame.clock_hz, signal_duty=self.frame.signal_duty
            )
        return evaluate_key_rate(
            tally_file.tally, measured, params, sec,
            clock_hz=self.frame.clock_hz,
            signal_duty=self.frame.signal_duty,
            filter_pass_fraction=self.filt.pass_fraction(),
        )

    def cmd_simulate(
        self,
        channel_path: str,
        params_path: Optional[str],
        N: float,
        tally_out: Optional[str] = None
    ) -> int:
        """Simulate one user pair, optionally writing its tally."""
        ch = records.load('channel', channel_path)
        params = self._params(params_path)
        tally, measured = simulate_session(
            params, ch, self.filt, N, self.mode, self.seed,
            int(self.config['simulation']['aopp_sample_size'])
        )
        if measured is None:
            report = infeasible_report(
                InfeasibleBounds('n_t <= 0'), N,
                clock_hz=self.frame.clock_hz, signal_duty=self.frame.signal_duty
            )
        else:
            report = evaluate_key_rate(
                tally, measured, params, self.sec,
                clock_hz=self.frame.clock_hz,
                signal_duty=self.frame.signal_duty,
                filter_pass_fraction=self.filt.pass_fraction(),
            )
        if tally_out:
            measured_fields = {'qber_before': tally.qber}
            if measured is not None:
                measured_fields.update(measured.to_dict())
            save_tally(TallyFile(
                tally=tally,
                metadata={'mode': self.mode, 'seed': self.seed, **ch.to_dict()},
                measured=measured_fields,
            ), tally_out)
            logger.info(f"Wrote tally to {tally_out}")
        print(render_trace(report, f"Simulated pair ({self.mode}, N={N:.3e})"), end='')
        self._emit(report_document(report, {
            'channel': ch.to_dict(), 'params': params.to_dict(), 'N': N,
            'mode': self.mode, 'seed': self.seed,
        }))
        return EXIT_OK if report.feasible else EXIT_INFEASIBLE

    def cmd_sweep(
        self,
        channel_path: Optional[str],
        params_path: Optional[str],
        N: float,
        losses: Optional[Sequence[float]] = None,
        kms: Optional[Sequence[float]] = None,
        optimize: bool = False,
        plot: Optional[str] = None
    ) -> int:
        """Key rate over per-arm loss or user-to-user distance."""
        template = records.load('channel', channel_path) if channel_path else self.base_channel
        params = self._params(params_path)
        points = []
        for loss in losses or []:
            points.append((loss, None, replace(template, loss_i_db=loss, loss_j_db=loss)))
        for km in kms or []:
            arm = self.loss_db_per_km * km / 2
            points.append((None, km, replace(template, loss_i_db=arm, loss_j_db=arm)))

        rows = []
        for loss, km, ch in points:
            if optimize:
                report = self._optimized_report(ch, N, params)
            else:
                report = simulate_keyrate(
                    params, ch, self.filt, N, self.sec, mode=self.mode, seed=self.seed,
                    aopp_sample_size=int(self.config['simulation']['aopp_sample_size']),
                    frame=self.frame
                )
            rows.append(sweep_row(report, loss, km))
            logger.info(f"Sweep point loss={loss} km={km}: R={report.rate_per_pulse:.4e}")

        sort_by = 'loss_db' if losses else 'km'
        rows = sorted(rows, key=lambda r: r[sort_by])
        if self.output:
            write_sweep_csv(rows, self.output, sort_by)
        for row in rows:
            print(f"{row[sort_by]:>8g}  R={row['R_per_pulse']:.4e} bit/pulse  "
                  f"{row['R_bps']:.4e} bit/s  feasible={row['feasible']}")
        if plot:
            self.plotter.plot_sweep(rows, plot, x=sort_by)
        return EXIT_OK

    def _optimized_report(self, ch: ChannelSpec, N: float, start: ProtocolParams) -> KeyRateReport:
        opt = self.config['optimizer']
        bounds = ParamBounds(
            mu_o=start.mu_o,
            mu_ref=start.mu_ref,
            grid_points=int(opt['grid_points']),
            tolerance=float(opt['tolerance']),
            min_step=float(opt['min_step']),
            max_passes=int(opt['max_passes']),
        )
        objective = KeyRateObjective(
            ch, N, self.sec, self.filt, self.frame, seed=self.seed,
            aopp_sample_size=int(opt['aopp_sample_size'])
        )
        try:
            result = optimize_params(
                ch, N, self.sec, bounds, seed=self.seed, start=start, filt=self.filt,
                frame=self.frame, workers=self.workers, objective=objective
            )
        except InfeasibleEverywhere as e:
            logger.info(str(e))
            return infeasible_report(
                InfeasibleBounds('no positive rate in search box'), N,
                clock_hz=self.frame.clock_hz, signal_duty=self.frame.signal_duty
            )
        logger.info(f"Optimised parameters: {result.best.to_dict()}")
        return result.report

    def cmd_capacity(self, inventory_path: str, strict: bool) -> int:
        """Port usage and concurrent-pair capacity of an inventory."""
        inv = records.load('inventory', inventory_path)
        used = check_ports(inv, strict)
        rows = capacity_breakdown(inv)
        total = total_capacity(inv, strict)
        stated = total_capacity(inv, strict, published_values=True)

        relation = '<' if strict else '<='
        print(f"Ports used: {used} {relation} {inv.switch_ports} (ok)")
        for row in rows:
            note = ''
            if row['published'] is not None and row['published'] != row['capacity']:
                note = f"  [published figure lists {row['published']}]"
            print(f"  {row['unit']:<8} x{row['count']}  capacity {row['capacity']}  "
                  f"oracle {row['oracle']}{note}")
        print(f"Total capacity: {total} pairs" + (f" (stated values give {stated})" if stated != total else ''))
        self._emit(ledger_document('capacity', {
            'ports_used': used,
            'switch_ports': inv.switch_ports,
            'strict': strict,
            'units': rows,
            'total_capacity': total,
            'total_capacity_stated': stated,
        }, {'inventory': inv.to_dict()}))
        return EXIT_OK

    def cmd_plan(self, inventory_path: str, users: Optional[List[int]], requests_path: str) -> int:
        """Schedule requested pairs onto the installed units."""
        inv = records.load('inventory', inventory_path)
        check_ports(inv, bool(self.config['network']['strict_ports']))
        file_users, pairs = records.load('requests', requests_path)
        active = users or file_users or sorted({u for pair in pairs for u in pair})
        net = self.config['network']
        plan = schedule(active, pairs, inv, int(net['exact_limit']), int(net['node_budget']))
        problems = validate_plan(plan, inv, pairs)
        for problem in problems:
            logger.error(f"Plan check failed: {problem}")

        print(f"Plan ({plan.method}): {plan.served} served, {len(plan.unserved)} unserved")
        for mu_id, served in sorted(plan.pairs_by_unit().items()):
            print(f"  {mu_id:<10} {', '.join(f'{a}-{b}' for a, b in served)}")
        if plan.unserved:
            print(f"  unserved   {', '.join(f'{a}-{b}' for a, b in plan.unserved)}")
        self._emit(ledger_document('plan', {'plan': plan.to_dict(), 'problems': problems},
                                   {'inventory': inv.to_dict(), 'users': active}))
        return EXIT_CONSTRAINT if problems else EXIT_OK

    def cmd_network(
        self,
        inventory_path: str,
        distances: Sequence[float],
        N: float,
        active_users: Sequence[int],
        params_path: Optional[str] = None,
        plot: Optional[str] = None
    ) -> int:
        """Total network key rate over active-user counts and distances."""
        inv = records.load('inventory', inventory_path)
        check_ports(inv, bool(self.config['network']['strict_ports']))
        rows = active_user_sweep(
            inv, active_users, distances, self._params(params_path), self.sec, N,
            self.base_channel, self.filt,
            loss_db_per_km=self.loss_db_per_km,
            stage_excess_db=float(self.config['network']['stage_excess_db']),
            seed=self.seed, frame=self.frame, workers=self.workers,
        )
        for row in rows:
            print(f"{row['active_users']:>4} users {row['distance_km']:>7g} km  "
                  f"{row['pairs_served']:>3} pairs  total {row['total_bps']:.4e} bit/s  "
                  f"best {row['best_pair_bps']:.4e}  worst {row['worst_pair_bps']:.4e}")
            published = PUBLISHED_NETWORK_RATES.get(row['distance_km'])
            if published and row['active_users'] == ports_used(inv):
                print(f"{'':>29}published total {published[0]:.4e} bit/s  best {published[1]:.4e}")
        if self.output:
            write_table_csv(rows, self.output)
        if plot:
            self.plotter.plot_network(rows, plot)
        return EXIT_OK

    def cmd_table2(self, data_dir: str) -> int:
        """Evaluate the shipped experiment tallies next to their printed rates."""
        data_dir = Path(data_dir)
        sec_path = data_dir / 'security.json'
        sec = records.load('security', sec_path) if sec_path.exists() else self.sec
        files = sorted((data_dir / 'table2').glob('*.json'))
        if not files:
            raise InputFormatError("No tally files found", str(data_dir / 'table2'))

        results = []
        for path in files:
            tally_file = load_tally(path)
            loss = tally_file.metadata.get('loss_db')
            if not isinstance(loss, (int, float)):
                raise InputFormatError("metadata.loss_db is required to pick the parameters", str(path))
            params = records.load('params', data_dir / f"table1_{int(loss)}db.json")
            report = self.keyrate_from_tally(tally_file, params, sec)
            printed = tally_file.metadata.get('printed_rate')
            ratio = report.rate_per_pulse / printed if printed else None
            results.append({
                'file': path.name,
                'pair': tally_file.metadata.get('pair'),
                'loss_db': loss,
                'R_per_pulse': report.rate_per_pulse,
                'raw_rate': report.raw_rate,
                'R_bps': report.rate_bps,
                'printed_rate': printed,
                'ratio': ratio,
                'feasible': report.feasible,
                'guard': report.guard,
            })
            printed_text = f"{printed:.4e}" if printed else 'n/a'
            ratio_text = f"{ratio:.3f}" if ratio is not None else 'n/a'
            print(f"{loss:>4g} dB pair {tally_file.metadata.get('pair')}: R={report.rate_per_pulse:.4e}  "
                  f"printed={printed_text}  ratio={ratio_text}  feasible={report.feasible}"
                  + ('' if report.feasible else f"  raw={report.raw_rate:.4e}"))
        self._emit(ledger_document('table2', {'rows': results}, {'data_dir': str(data_dir)}))
        # Rows with R = 0 are reported; the run still succeeds
        return EXIT_OK

    def cmd_whatif(
        self,
        mu_types: Sequence[tuple],
        switch_ports: int,
        strict: bool,
        max_each: Optional[int] = None,
        top: Optional[int] = 10
    ) -> int:
        """Rank unit compositions that fit the switch."""
        rows = whatif_inventories(mu_types, switch_ports, max_each, strict, top)
        for row in rows:
            inv: MuInventory = row['inventory']
            units = ', '.join(f"{spec.label}" for _, spec in inv.units())
            print(f"capacity {row['capacity']:>4}  ports {row['ports_used']:>3}  [{units}]")
        self._emit(ledger_document('whatif', {
            'rows': [
                {'inventory': r['inventory'].to_dict(), 'capacity': r['capacity'],
                 'ports_used': r['ports_used']}
                for r in rows
            ],
        }, {'mu_types': [list(t) for t in mu_types], 'switch_ports': switch_ports}))
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Path to configuration file')
    common.add_argument('--log-level', help='Logging level (overrides config)')
    common.add_argument('--seed', type=int, help='Random seed (overrides config)')
    common.add_argument('--mode', choices=sorted(MODES), help='Simulation mode (overrides config)')
    common.add_argument('--duty', type=float, help='Signal duty cycle (overrides config)')
    common.add_argument('--clock-hz', type=float, help='Source clock in Hz (overrides config)')
    common.add_argument('--strict-ports', action='store_true', help='Use the strict port constraint')
    common.add_argument('--output', help='Write the report, CSV or document here')

    parser = argparse.ArgumentParser(description='Twin-field QKD network key-rate toolkit')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('keyrate', parents=[common], help='Key rate of a recorded tally')
    p.add_argument('--tally', required=True)
    p.add_argument('--params')
    p.add_argument('--security')

    p = sub.add_parser('simulate', parents=[common], help='Simulate one user pair')
    p.add_argument('--channel', required=True)
    p.add_argument('--params')
    p.add_argument('--pulses', type=float, help='Pulses per user (overrides config)')
    p.add_argument('--tally-out', help='Write the simulated tally here')

    p = sub.add_parser('sweep', parents=[common], help='Key rate over loss or distance')
    p.add_argument('--channel', help='Channel template (losses are replaced)')
    p.add_argument('--params')
    p.add_argument('--optimize', action='store_true', help='Optimise parameters at each point')
    span = p.add_mutually_exclusive_group(required=True)
    span.add_argument('--loss', nargs=3, type=float, metavar=('START', 'STOP', 'STEP'),
                      help='Per-arm loss range in dB')
    span.add_argument('--km', nargs=3, type=float, metavar=('START', 'STOP', 'STEP'),
                      help='User-to-user distance range in km')
    p.add_argument('--pulses', type=float)
    p.add_argument('--plot', help='Write a figure here')

    p = sub.add_parser('capacity', parents=[common], help='Capacity of an inventory')
    p.add_argument('--inventory', required=True)

    p = sub.add_parser('plan', parents=[common], help='Schedule requested pairs')
    p.add_argument('--inventory', required=True)
    p.add_argument('--requests', required=True)
    p.add_argument('--users', type=int, nargs='+', help='Active users (defaults to the request file)')

    p = sub.add_parser('network', parents=[common], help='Network-wide key rate')
    p.add_argument('--inventory', required=True)
    p.add_argument('--distance-km', type=float, nargs='+', required=True)
    p.add_argument('--active-users', type=int, nargs='+', required=True)
    p.add_argument('--params')
    p.add_argument('--pulses', type=float)
    p.add_argument('--plot', help='Write a figure here')

    p = sub.add_parser('table2', parents=[common], help='Evaluate the shipped experiment tallies')
    p.add_argument('--data-dir', default=str(src_path / 'data'))

    p = sub.add_parser('whatif', parents=[common], help='Rank unit compositions')
    p.add_argument('--types', type=_mu_type, nargs='+', required=True, help='Unit types as n,i')
    p.add_argument('--switch-ports', type=int, required=True)
    p.add_argument('--max-each', type=int)
    p.add_argument('--top', type=int, default=10)
    return parser


def run(args: argparse.Namespace) -> int:
    """Load configuration, apply overrides and dispatch the command."""
    config = load_config(args.config)

    # Override config with command line arguments
    if args.log_level:
        config['logging']['level'] = args.log_level
    if args.seed is not None:
        config['simulation']['seed'] = args.seed
    if args.mode:
        config['simulation']['mode'] = args.mode
    if args.duty is not None:
        config['frame']['duty'] = args.duty
    if args.clock_hz is not None:
        config['frame']['clock_hz'] = args.clock_hz
    if args.strict_ports:
        config['network']['strict_ports'] = True
    level = getattr(logging, str(config['logging']['level']).upper(), None)
    if not isinstance(level, int):
        raise InvalidParameters(f"Unknown log level '{config['logging']['level']}'")
    logging.getLogger().setLevel(level)

    controller = QNetController(config, output=args.output)
    strict = bool(config['network']['strict_ports'])
    if args.command == 'keyrate':
        return controller.cmd_keyrate(args.tally, args.params, args.security)
    if args.command == 'simulate':
        N = args.pulses or float(config['simulation']['pulses'])
        return controller.cmd_simulate(args.channel, args.params, N, args.tally_out)
    if args.command == 'sweep':
        N = args.pulses or float(config['simulation']['pulses'])
        losses = _float_range(*args.loss) if args.loss else None
        kms = _float_range(*args.km) if args.km else None
        return controller.cmd_sweep(args.channel, args.params, N, losses, kms, args.optimize, args.plot)
    if args.command == 'capacity':
        return controller.cmd_capacity(args.inventory, strict)
    if args.command == 'plan':
        return controller.cmd_plan(args.inventory, args.users, args.requests)
    if args.command == 'network':
        N = args.pulses or float(config['network']['pulses'])
        return controller.cmd_network(args.inventory, args.distance_km, N, args.active_users,
                                      args.params, args.plot)
    if args.command == 'table2':
        return controller.cmd_table2(args.data_dir)
    if args.command == 'whatif':
        return controller.cmd_whatif(args.types, args.switch_ports, strict, args.max_each, args.top)
    raise InvalidParameters(f"Unknown command '{args.command}'")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConstraintViolation as e:
        logger.error(str(e))
        return EXIT_CONSTRAINT
    except (InfeasibleBounds, InfeasibleEverywhere) as e:
        logger.error(str(e))
        return EXIT_INFEASIBLE
    except (InputFormatError, InvalidParameters) as e:
        logger.error(str(e))
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
