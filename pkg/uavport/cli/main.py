"""
Command-line interface for uavport

Runs single simulations and fleet-size sweeps, audits traces and renders
sweep plots. Every flag can also be set through a ``UAVPORT_`` environment
variable; flags win over the environment, which wins over the scenario.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from ..domain import SchemeName, ScenarioConfig, ScenarioError, load_scenario
from ..fsm import export_machines
from ..orders import (
    Order,
    OrderError,
    check_trends,
    compute_metrics,
    plot_summary,
    read_metrics,
    read_orders,
    summarize_sweep,
    write_metrics,
    write_summary,
)
from ..sim import Engine, TraceFormatError
from ..verify import format_report, verify_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3

ENV_PREFIX = 'UAVPORT_'
LOG_FORMAT = '[%(asctime)s] [%(levelname)s] %(name)s: %(message)s'
DEFAULT_UAV_COUNTS = (4, 6, 8, 10, 12, 14, 16)
ALL_SCHEMES = tuple(s.value for s in SchemeName)
FAILURE_COLUMNS = ['cell', 'scheme', 'n_uavs', 'seed', 'status', 'error']


class Colors:
    """ANSI color codes for terminal output"""
    RED = '\033[91m'
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    BLUE = '\033[94m'
    CYAN = '\033[96m'
    BOLD = '\033[1m'
    RESET = '\033[0m'


def print_error(message: str):
    """Print an error message"""
    print(f"{Colors.RED}❌ Error:{Colors.RESET} {message}", file=sys.stderr)


def print_success(message: str):
    """Print a success message"""
    print(f"{Colors.GREEN}✓{Colors.RESET} {message}")


def print_warning(message: str):
    """Print a warning message"""
    print(f"{Colors.YELLOW}⚠{Colors.RESET} {message}")


def print_info(message: str):
    """Print an info message"""
    print(f"{Colors.CYAN}ℹ{Colors.RESET} {message}")


def print_section(title: str):
    """Print a section header"""
    print(f"\n{Colors.BOLD}{Colors.CYAN}{'=' * 60}{Colors.RESET}")
    print(f"{Colors.BOLD}{Colors.CYAN}{title}{Colors.RESET}")
    print(f"{Colors.BOLD}{Colors.CYAN}{'=' * 60}{Colors.RESET}\n")


class UsageError(ValueError):
    """Raised for flag or environment values that cannot be used"""
    pass


def _truthy(value: str) -> bool:
    return value.strip().lower() in ('1', 'true', 'yes', 'on')


def _int_list(value: str) -> List[int]:
    try:
        return [int(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got '{value}'") from None


def _scheme_list(value: str) -> List[str]:
    names = [v.strip() for v in value.split(',') if v.strip()]
    unknown = [n for n in names if n not in ALL_SCHEMES]
    if unknown:
        raise UsageError(f"unknown scheme(s) {unknown}; choose from {list(ALL_SCHEMES)}")
    return names


@dataclass(frozen=True)
class RunSpec:
    """
    Everything one invocation needs, resolved from flags and environment

    ``None`` means "take it from the scenario".
    """
    scenario: Optional[str] = None
    scheme: Optional[str] = None
    uavs: Optional[int] = None
    duration: Optional[float] = None
    seed: Optional[int] = None
    orders: Optional[str] = None
    order_rate: Optional[float] = None
    better_offset: Optional[float] = None
    timeout_offset: Optional[float] = None
    out: str = 'results'
    realtime: bool = False
    snapshot_every: int = 0
    workers: int = 1

    ENV_CASTS = {
        'scenario': str, 'scheme': str, 'uavs': int, 'duration': float, 'seed': int,
        'orders': str, 'order_rate': float, 'better_offset': float, 'timeout_offset': float,
        'out': str, 'realtime': _truthy, 'snapshot_every': int, 'workers': int,
    }

    @classmethod
    def resolve(cls, args: argparse.Namespace, environ: Mapping[str, str] = os.environ) -> 'RunSpec':
        """Apply flag, then ``UAVPORT_*`` environment, then the dataclass default"""
        values: Dict[str, Any] = {}
        for f in fields(cls):
            flag = getattr(args, f.name, None)
            if flag is not None and flag is not False:
                values[f.name] = flag
                continue
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is None or raw == '':
                continue
            try:
                values[f.name] = cls.ENV_CASTS[f.name](raw)
            except ValueError:
                raise UsageError(f"{ENV_PREFIX}{f.name.upper()}={raw!r} is not a valid value") from None
        return cls(**values)

    def build_config(self) -> ScenarioConfig:
        """Load the scenario (or the bundled default) and apply the overrides"""
        if self.scheme and self.scheme not in ALL_SCHEMES:
            raise UsageError(f"unknown scheme '{self.scheme}'; choose from {list(ALL_SCHEMES)}")
        if self.scenario:
            config = load_scenario(self.scenario)
            if self.scheme and self.scheme != config.scheme.value:
                config = config.with_scheme(self.scheme)
        else:
            config = ScenarioConfig.default(self.scheme or SchemeName.ONE_CYCLE.value)
        changes: Dict[str, Any] = {}
        if self.uavs is not None:
            changes['n_uavs'] = self.uavs
        if self.duration is not None:
            changes['duration_s'] = self.duration
        if self.seed is not None:
            changes['seed'] = self.seed
        order_changes = {
            'rate_per_s': self.order_rate,
            'better_offset_s': self.better_offset,
            'timeout_offset_s': self.timeout_offset,
        }
        order_changes = {k: v for k, v in order_changes.items() if v is not None}
        if order_changes:
            changes['orders'] = replace(config.orders, **order_changes)
        return config.replace(**changes) if changes else config

    def load_orders(self, config: ScenarioConfig) -> Optional[List[Order]]:
        if not self.orders:
            return None
        return read_orders(self.orders, config.station_ids)


def run_once(config: ScenarioConfig, orders: Optional[Sequence[Order]], out_dir: Path,
             trace_name: str, realtime: bool = False, snapshot_every: int = 0, workers: int = 1):
    """Run one simulation, write its trace and return (metrics report, trace path)"""
    out_dir.mkdir(parents=True, exist_ok=True)
    snapshot_path = out_dir / 'snapshots.jsonl' if snapshot_every else None
    if snapshot_path is not None and snapshot_path.exists():
        snapshot_path.unlink()
    engine = Engine(config, orders, workers=workers, realtime=realtime,
                    snapshot_every=snapshot_every, snapshot_path=snapshot_path)
    try:
        engine.run()
        trace = engine.finish()
    finally:
        engine.close()
    trace_path = trace.write_jsonl(out_dir / trace_name)
    return compute_metrics(trace), trace_path


def _failure(name: str, scheme: str, n_uavs: int, seed: int, status: str, error) -> Dict[str, Any]:
    return {'cell': name, 'scheme': scheme, 'n_uavs': n_uavs, 'seed': seed,
            'status': status, 'error': str(error)}


def _sweep_cell(cell: Tuple[ScenarioConfig, Optional[List[Order]], str, str]) -> Tuple[Optional[Dict], Optional[str]]:
    config, orders, out_dir, name = cell
    try:
        report, _ = run_once(config, orders, Path(out_dir), name)
        return report.to_row(), None
    except Exception as e:
        logger.exception("sweep cell %s failed", name)
        return None, f"{type(e).__name__}: {e}"


# -- commands -----------------------------------------------------------------

def cmd_run(spec: RunSpec) -> int:
    config = spec.build_config()
    orders = spec.load_orders(config)
    out = Path(spec.out)
    print_info(f"Running {config.scheme.value} with {config.n_uavs} UAVs for {config.duration_s:.0f} s "
               f"(seed {config.seed})")
    report, trace_path = run_once(config, orders, out, 'trace.jsonl', spec.realtime,
                                  spec.snapshot_every, spec.workers)
    metrics_path = write_metrics([report], out / 'metrics.csv')

    print_section("Run Summary")
    print(f"  Orders issued:    {report.orders_issued}")
    print(f"  Delivered:        {report.delivered}")
    print(f"  Score sum:        {report.score_sum:.2f}")
    print(f"  Score mean:       {report.score_mean:.2f}")
    print(f"  AGV busy ratio:   {report.agv_busy:.3f}")
    print(f"  Staff busy ratio: {report.staff_busy:.3f}")
    print(f"  Deferrals:        {report.deferrals}")
    if report.anomalies:
        print_warning(f"{report.anomalies} anomalies recorded")
    print_success(f"Trace written to {trace_path}")
    print_success(f"Metrics written to {metrics_path}")
    return EXIT_OK


def cmd_sweep(spec: RunSpec, schemes: Sequence[str], uav_counts: Sequence[int], seeds: Sequence[int],
              jobs: int = 1, trends: bool = False) -> int:
    base = spec.build_config()
    orders = spec.load_orders(base)
    out = Path(spec.out)
    traces = out / 'traces'
    cells, failures = [], []
    for scheme in schemes:
        scheme_config = base.with_scheme(scheme) if scheme != base.scheme.value else base
        for n in uav_counts:
            for seed in seeds:
                name = f"{scheme}_u{n}_s{seed}.jsonl"
                try:
                    config = scheme_config.replace(n_uavs=n, seed=seed)
                except ScenarioError as e:
                    failures.append(_failure(name, scheme, n, seed, 'invalid', e))
                    print_error(f"{name}: {e}")
                    continue
                cells.append((config, orders, str(traces), name))
    print_info(f"Sweeping {len(cells)} cell(s) with {jobs} job(s)")

    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_cell, cells))
    else:
        outcomes = [_sweep_cell(cell) for cell in cells]

    rows = []
    for (config, _, _, name), (row, error) in zip(cells, outcomes):
        if error is None:
            rows.append(row)
            logger.info("sweep cell %s done: %d delivered", name, row['delivered'])
        else:
            failures.append(_failure(name, config.scheme.value, config.n_uavs, config.seed, 'failed', error))
            print_error(f"{name}: {error}")

    metrics_path = write_metrics(rows, out / 'metrics.csv')
    summary = summarize_sweep(read_metrics(metrics_path))
    summary_path = write_summary(summary, out / 'sweep_summary.csv')
    failures_path = out / 'sweep_failures.csv'
    pd.DataFrame(failures, columns=FAILURE_COLUMNS).to_csv(failures_path, index=False)
    print_success(f"{len(rows)} row(s) written to {metrics_path}")
    print_success(f"Summary written to {summary_path}")

    if trends:
        result = check_trends(summary)
        print_section("Trend Check")
        for name, ok in result['checks'].items():
            (print_success if ok else print_warning)(name)
        for violation in result['violations']:
            print(f"    • {violation['message']}")
    if failures:
        print_error(f"{len(failures)} sweep cell(s) failed, see {failures_path}")
        if any(f['status'] == 'failed' for f in failures):
            return EXIT_RUNTIME
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_verify(path: str) -> int:
    try:
        result = verify_trace(path)
    except TraceFormatError as e:
        print_error(str(e))
        return EXIT_VALIDATION
    print_section(f"Verification of {path}")
    print(format_report(result))
    stats = result['stats']
    print(f"\n  {stats['arrivals']} arrivals, {stats['landings']} landings, "
          f"{stats['transitions']} transitions over {stats['last_tick']} ticks")
    if result['passed']:
        print_success("Trace satisfies every invariant")
        return EXIT_OK
    print_error(f"{len(result['violations'])} violation(s) found")
    return EXIT_VERIFY


def cmd_plot(summary_path: Path, image_path: Path) -> int:
    import pandas as pd

    try:
        summary = pd.read_csv(summary_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        print_error(f"cannot read sweep summary {summary_path}: {e}")
        return EXIT_VALIDATION
    plot_summary(summary, image_path)
    print_success(f"Plot written to {image_path}")
    return EXIT_OK


def cmd_export_fsm(out: Path) -> int:
    for path in export_machines(out):
        print_success(f"Wrote {path}")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='uavport',
        description='uavport - UAV airport and unloading station delivery simulator',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  uavport run --scheme two-cycle --uavs 8 --seed 7      # One hour-long run
  uavport sweep --seeds 1,2,3 --jobs 4 --check-trends    # Every scheme, 4..16 UAVs
  uavport verify results/trace.jsonl                     # Audit a trace
  uavport plot results/sweep_summary.csv                 # Render the sweep curves
  uavport export-fsm --out docs/fsm                      # GraphML of both machines

Every flag has an environment mirror, e.g. UAVPORT_SEED=3.
        """
    )
    parser.add_argument('command', choices=['run', 'sweep', 'verify', 'plot', 'export-fsm'],
                        help='Command to execute')
    parser.add_argument('target', nargs='?', help='Trace file (verify) or sweep summary (plot)')
    parser.add_argument('--scenario', help='Scenario file (YAML)')
    parser.add_argument('--scheme', choices=ALL_SCHEMES, help='Cycle scheme')
    parser.add_argument('--uavs', type=int, help='Number of UAVs')
    parser.add_argument('--duration', type=float, help='Simulated seconds')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--orders', help='Order list CSV (replaces generated orders)')
    parser.add_argument('--order-rate', type=float, help='Mean orders per second')
    parser.add_argument('--better-offset', type=float, help='Seconds from order to BetterT')
    parser.add_argument('--timeout-offset', type=float, help='Seconds from order to TimeOut')
    parser.add_argument('--out', help='Output directory (default: results)')
    parser.add_argument('--realtime', action='store_true', help='Pace ticks to wall-clock time')
    parser.add_argument('--snapshot-every', type=int, help='Write a world snapshot every N ticks')
    parser.add_argument('--workers', type=int, help='Threads for FSM steps inside a run')
    parser.add_argument('--schemes', default=','.join(ALL_SCHEMES),
                        help='Sweep: comma-separated schemes (default: all three)')
    parser.add_argument('--uav-counts', default=','.join(str(n) for n in DEFAULT_UAV_COUNTS),
                        help='Sweep: comma-separated fleet sizes (default: 4..16 step 2)')
    parser.add_argument('--seeds', help='Sweep: comma-separated seeds (default: the run seed)')
    parser.add_argument('--jobs', type=int, default=1, help='Sweep: parallel processes (default: 1)')
    parser.add_argument('--check-trends', action='store_true', help='Sweep: report the expected trends')
    parser.add_argument('--log-level', default=None,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='Logging level (default: WARNING)')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_VALIDATION

    level = args.log_level or os.environ.get(ENV_PREFIX + 'LOG_LEVEL', 'WARNING')
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING), format=LOG_FORMAT)

    try:
        spec = RunSpec.resolve(args)
        if args.command == 'run':
            return cmd_run(spec)
        if args.command == 'sweep':
            seeds = _int_list(args.seeds) if args.seeds else [spec.build_config().seed]
            return cmd_sweep(spec, _scheme_list(args.schemes), _int_list(args.uav_counts), seeds,
                             max(1, args.jobs), args.check_trends)
        if args.command == 'verify':
            if not args.target:
                raise UsageError("verify needs a trace file")
            return cmd_verify(args.target)
        if args.command == 'plot':
            summary = Path(args.target) if args.target else Path(spec.out) / 'sweep_summary.csv'
            return cmd_plot(summary, summary.with_name('sweep_plots.png'))
        return cmd_export_fsm(Path(spec.out))
    except (ScenarioError, OrderError, UsageError) as e:
        print_error(str(e))
        return EXIT_VALIDATION
    except Exception as e:
        logger.exception("command %s failed", args.command)
        print_error(f"Runtime error: {e}")
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
