"""Delivery orders, scoring and run metrics"""
from .orders import (
    OrderError,
    ScoreError,
    OrderFileError,
    Order,
    OrderBook,
    score,
    generate_orders,
    assign_orders,
    read_orders,
    write_orders,
)
from .metrics import (
    METRICS_COLUMNS,
    SUMMARY_COLUMNS,
    MetricsReport,
    busy_ratios,
    compute_metrics,
    metrics_frame,
    write_metrics,
    read_metrics,
    summarize_sweep,
    check_trends,
    write_summary,
)
from .plots import (
    plot_summary,
)

__all__ = [
    'OrderError', 'ScoreError', 'OrderFileError', 'Order', 'OrderBook', 'score',
    'generate_orders', 'assign_orders', 'read_orders', 'write_orders',
    'METRICS_COLUMNS', 'SUMMARY_COLUMNS', 'MetricsReport', 'busy_ratios', 'compute_metrics',
    'metrics_frame', 'write_metrics', 'read_metrics', 'summarize_sweep', 'check_trends',
    'write_summary', 'plot_summary',
]
