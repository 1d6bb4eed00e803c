"""
Run metrics

Everything here is post-processing over a finished event trace: delivery
counts and scores, AGV and ground-staff busy ratios, and the aggregation
of sweep rows into plot-ready summaries.
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

import pandas as pd

from ..trace import EventTrace, TraceKind

logger = logging.getLogger(__name__)

METRICS_COLUMNS = [
    'scheme', 'n_uavs', 'seed', 'delivered', 'score_sum', 'score_mean', 'agv_busy',
    'staff_busy', 'deferrals', 'anomalies', 'orders_issued', 'undelivered',
]

SUMMARY_COLUMNS = [
    'scheme', 'n_uavs', 'runs', 'delivered_mean', 'delivered_std', 'score_sum_mean',
    'score_sum_std', 'score_mean_mean', 'agv_busy_mean', 'staff_busy_mean',
    'deferrals_mean', 'anomalies_mean',
]

STAFF_SERVICES = ('load', 'swap')


@dataclass(frozen=True)
class MetricsReport:
    """One metrics row: a single (scheme, fleet size, seed) run"""
    scheme: str
    n_uavs: int
    seed: int
    delivered: int
    score_sum: float
    score_mean: float
    agv_busy: float
    staff_busy: float
    deferrals: int
    anomalies: int
    orders_issued: int
    undelivered: int

    def to_row(self) -> Dict[str, Any]:
        return asdict(self)


def _run_bounds(trace: EventTrace) -> Tuple[Dict[str, Any], int]:
    starts = trace.of_kind(TraceKind.RUN_START)
    if not starts:
        raise ValueError("trace has no run-start record")
    return dict(starts[0].payload), trace.last_tick


def busy_ratios(trace: EventTrace) -> Tuple[float, float]:
    """
    AGV and staff busy ratios of a complete trace

    An AGV is busy while it drives along an edge or while a service runs
    on it; at rest and unserviced it is idle, waiting for instructions.
    A staff member is busy while executing a load or a battery swap.

    Returns:
        (agv ratio, staff ratio), both in [0, 1]
    """
    config, end = _run_bounds(trace)
    agv_alive: Dict[int, int] = {}
    busy_since: Dict[Tuple[str, int], int] = {}
    agv_busy = 0
    staff_busy = 0

    def close(key, tick):
        nonlocal agv_busy, staff_busy
        since = busy_since.pop(key, None)
        if since is None:
            return
        if key[0] == 'staff':
            staff_busy += tick - since
        else:
            agv_busy += tick - since

    active: Dict[int, int] = {}
    for event in trace:
        kind = event.kind
        if kind is TraceKind.SPAWN and event.get('vehicle') == 'agv':
            agv_alive[event['id']] = event.tick
        elif kind is TraceKind.DEPART:
            active[event['agv']] = active.get(event['agv'], 0) + 1
            busy_since.setdefault(('agv', event['agv']), event.tick)
        elif kind is TraceKind.NODE:
            active[event['agv']] = max(0, active.get(event['agv'], 0) - 1)
            if not active[event['agv']]:
                close(('agv', event['agv']), event.tick)
        elif kind is TraceKind.SERVICE_START and event.get('service') in STAFF_SERVICES:
            active[event['agv']] = active.get(event['agv'], 0) + 1
            busy_since.setdefault(('agv', event['agv']), event.tick)
            busy_since[('staff', event['staff'])] = event.tick
        elif kind is TraceKind.SERVICE_END and event.get('service') in STAFF_SERVICES:
            active[event['agv']] = max(0, active.get(event['agv'], 0) - 1)
            if not active[event['agv']]:
                close(('agv', event['agv']), event.tick)
            close(('staff', event['staff']), event.tick)
    for key in list(busy_since):
        close(key, end)

    agv_ticks = sum(end - t for t in agv_alive.values())
    staff_ticks = int(config.get('n_staff', 0)) * (end - int(config.get('start_tick', 0)))
    agv_ratio = agv_busy / agv_ticks if agv_ticks > 0 else 0.0
    staff_ratio = staff_busy / staff_ticks if staff_ticks > 0 else 0.0
    return min(1.0, agv_ratio), min(1.0, staff_ratio)


def compute_metrics(trace: EventTrace) -> MetricsReport:
    """Build the metrics row of one complete run"""
    config, _ = _run_bounds(trace)
    scores = [float(e['score']) for e in trace.of_kind(TraceKind.DELIVERED)]
    ends = trace.of_kind(TraceKind.RUN_END)
    orders_issued = int(ends[-1].get('orders_issued', len(scores))) if ends else len(scores)
    agv_busy, staff_busy = busy_ratios(trace)
    score_sum = float(sum(scores))
    return MetricsReport(
        scheme=config['scheme'],
        n_uavs=int(config['n_uavs']),
        seed=int(config['seed']),
        delivered=len(scores),
        score_sum=round(score_sum, 6),
        score_mean=round(score_sum / len(scores), 6) if scores else 0.0,
        agv_busy=round(agv_busy, 6),
        staff_busy=round(staff_busy, 6),
        deferrals=trace.count(TraceKind.DEFERRAL),
        anomalies=trace.count(TraceKind.ANOMALY),
        orders_issued=orders_issued,
        undelivered=max(0, orders_issued - len(scores)),
    )


def metrics_frame(reports: Iterable[Union[MetricsReport, Dict[str, Any]]]) -> pd.DataFrame:
    rows = [r.to_row() if isinstance(r, MetricsReport) else dict(r) for r in reports]
    return pd.DataFrame(rows, columns=METRICS_COLUMNS)


def write_metrics(reports: Iterable[Union[MetricsReport, Dict[str, Any]]], path: Union[str, Path],
                  append: bool = False) -> Path:
    """Write metrics rows; with ``append`` rows are added below an existing header"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = metrics_frame(reports)
    if append and path.exists() and path.stat().st_size > 0:
        frame.to_csv(path, mode='a', header=False, index=False)
    else:
        frame.to_csv(path, index=False)
    return path


def read_metrics(path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(path)
    missing = [c for c in METRICS_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"metrics file {path} lacks columns {missing}")
    return frame[METRICS_COLUMNS]


def summarize_sweep(frame: pd.DataFrame) -> pd.DataFrame:
    """
    Mean and spread over seeds per (scheme, n_uavs)

    Args:
        frame: Metrics rows with METRICS_COLUMNS

    Returns:
        One row per (scheme, n_uavs) with SUMMARY_COLUMNS; std is 0 for a single run
    """
    if frame.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = frame.groupby(['scheme', 'n_uavs'], sort=True)
    summary = grouped.agg(
        runs=('seed', 'count'),
        delivered_mean=('delivered', 'mean'),
        delivered_std=('delivered', 'std'),
        score_sum_mean=('score_sum', 'mean'),
        score_sum_std=('score_sum', 'std'),
        score_mean_mean=('score_mean', 'mean'),
        agv_busy_mean=('agv_busy', 'mean'),
        staff_busy_mean=('staff_busy', 'mean'),
        deferrals_mean=('deferrals', 'mean'),
        anomalies_mean=('anomalies', 'mean'),
    ).reset_index()
    summary = summary.fillna({'delivered_std': 0.0, 'score_sum_std': 0.0})
    return summary[SUMMARY_COLUMNS]


def _non_decreasing(series: pd.Series, slack: float = 1e-9) -> bool:
    values = series.to_numpy()
    return bool(all(b >= a - slack for a, b in zip(values, values[1:])))


def check_trends(summary: pd.DataFrame) -> Dict[str, Any]:
    """
    Qualitative trends a fleet-size sweep is expected to show

    Returns:
        Dictionary with 'passed', 'violations' and the per-check outcome
    """
    violations: List[Dict[str, Any]] = []
    checks: Dict[str, bool] = {}

    def note(name: str, ok: bool, message: str, **extra):
        checks[name] = checks.get(name, True) and ok
        if not ok:
            violations.append({'type': name, 'message': message, **extra})

    for scheme, rows in summary.sort_values('n_uavs').groupby('scheme', sort=True):
        for column in ('delivered_mean', 'score_sum_mean', 'agv_busy_mean', 'staff_busy_mean'):
            note(f'{column}-non-decreasing', _non_decreasing(rows[column]),
                 f"{scheme}: {column} decreases with fleet size", scheme=scheme)
        upper = rows[rows['n_uavs'] >= 8]
        gains = upper['score_sum_mean'].diff().dropna()
        note('diminishing-score-gain', _non_decreasing(-gains, slack=1e-6),
             f"{scheme}: marginal score gain grows above 8 UAVs", scheme=scheme)

    large = summary[summary['n_uavs'].between(12, 16)]
    for n_uavs, rows in large.groupby('n_uavs', sort=True):
        by_scheme = rows.set_index('scheme')
        if {'one-cycle', 'two-cycle', 'three-cycle'} <= set(by_scheme.index):
            score = by_scheme['score_sum_mean']
            note('scheme-score-order',
                 score['two-cycle'] >= score['one-cycle'] >= score['three-cycle'],
                 f"{n_uavs} UAVs: score order is not two >= one >= three", n_uavs=int(n_uavs))
            note('staff-busiest-two-cycle',
                 by_scheme['staff_busy_mean'].idxmax() == 'two-cycle',
                 f"{n_uavs} UAVs: staff are not busiest under two-cycle", n_uavs=int(n_uavs))
            note('agv-busiest-three-cycle',
                 by_scheme['agv_busy_mean'].idxmax() == 'three-cycle',
                 f"{n_uavs} UAVs: AGVs are not busiest under three-cycle", n_uavs=int(n_uavs))

    return {
        'passed': not violations,
        'checks': checks,
        'violations': violations,
    }


def write_summary(summary: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    summary.to_csv(path, index=False)
    return path
