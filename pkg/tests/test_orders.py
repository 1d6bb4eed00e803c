"""
Tests for orders, scoring, metrics and sweep summaries
"""

import pandas as pd
import pytest

from uavport.orders import (
    SUMMARY_COLUMNS,
    Order,
    OrderBook,
    OrderError,
    OrderFileError,
    ScoreError,
    assign_orders,
    busy_ratios,
    check_trends,
    compute_metrics,
    generate_orders,
    plot_summary,
    read_orders,
    score,
    summarize_sweep,
    write_metrics,
    read_metrics,
    write_orders,
)
from uavport.trace import EventTrace, TraceKind


def delivered(finish_t, better_t=600.0, timeout_t=1200.0):
    order = Order(1, 1, 0.0, better_t, timeout_t)
    order.finish(finish_t)
    return order


class TestScore:
    """Test cases for the delivery score"""

    @pytest.mark.parametrize('finish_t, expected', [
        (300.0, 100.0),
        (600.0, 100.0),
        (900.0, 50.0),
        (1200.0, 0.0),
        (1800.0, -100.0),
    ])
    def test_piecewise_linear(self, finish_t, expected):
        """Full marks up to better_t, zero at timeout_t, negative after"""
        assert score(delivered(finish_t)) == pytest.approx(expected)

    def test_undelivered_cannot_be_scored(self):
        """Scoring needs a finish time"""
        with pytest.raises(ScoreError):
            score(Order(1, 1, 0.0, 600.0, 1200.0))

    def test_double_finish_rejected(self):
        """An order is delivered once"""
        order = delivered(700.0)
        with pytest.raises(OrderError):
            order.finish(800.0)

    def test_window_order_enforced(self):
        """better_t must come before timeout_t"""
        with pytest.raises(OrderError):
            Order(1, 1, 0.0, 1200.0, 600.0)


class TestGenerateOrders:
    """Test cases for the Poisson order generator"""

    def test_same_seed_same_orders(self):
        """Generation is a pure function of its seed"""
        a = generate_orders(0.05, 3600.0, 4, seed=11)
        b = generate_orders(0.05, 3600.0, 4, seed=11)
        assert a == b
        assert a != generate_orders(0.05, 3600.0, 4, seed=12)

    def test_orders_are_sorted_and_windowed(self):
        """Order times ascend; windows are offsets from the order time"""
        orders = generate_orders(0.05, 3600.0, [2, 3], windows=(600.0, 1200.0), seed=1)
        assert len(orders) > 0
        times = [o.order_t for o in orders]
        assert times == sorted(times)
        assert [o.id for o in orders] == list(range(1, len(orders) + 1))
        assert {o.station for o in orders} <= {2, 3}
        assert all(o.better_t - o.order_t == pytest.approx(600.0) for o in orders)
        assert all(o.timeout_t - o.order_t == pytest.approx(1200.0) for o in orders)

    @pytest.mark.parametrize('rate, windows', [(0.0, (300.0, 900.0)), (0.1, (900.0, 300.0))])
    def test_bad_parameters(self, rate, windows):
        """Non-positive rates and inverted windows are rejected"""
        with pytest.raises(OrderError):
            generate_orders(rate, 60.0, 4, windows=windows)


class TestOrderBook:
    """Test cases for order assignment and delivery"""

    def test_fifo_assignment(self):
        """The oldest pending orders go first"""
        orders = [Order(2, 1, 5.0, 10.0, 20.0), Order(1, 1, 1.0, 10.0, 20.0), Order(3, 1, 5.0, 10.0, 20.0)]
        assert assign_orders([7, 8], orders) == {1: 7, 2: 8}

    def test_pending_respects_issue_time(self):
        """Orders in the future and assigned orders are not pending"""
        book = OrderBook([Order(1, 1, 0.0, 10.0, 20.0), Order(2, 1, 50.0, 60.0, 70.0)])
        assert [o.id for o in book.pending(10.0)] == [1]
        book.mark_assigned(1, uav=4)
        assert book.pending(60.0)[0].id == 2
        with pytest.raises(OrderError):
            book.mark_assigned(1, uav=5)

    def test_release_and_finish(self):
        """A released order queues again; finishing returns its score"""
        book = OrderBook([Order(1, 1, 0.0, 600.0, 1200.0)])
        book.mark_assigned(1, uav=4)
        book.release(1)
        assert book.pending(0.0)[0].id == 1
        assert book.finish(1, 900.0) == pytest.approx(50.0)
        assert len(book.delivered) == 1
        with pytest.raises(OrderError):
            book.release(1)

    def test_caller_orders_untouched(self):
        """The book works on copies"""
        original = Order(1, 1, 0.0, 600.0, 1200.0)
        book = OrderBook([original])
        book.finish(1, 100.0)
        assert original.finish_t is None

    def test_duplicate_ids_rejected(self):
        with pytest.raises(OrderError):
            OrderBook([Order(1, 1, 0.0, 1.0, 2.0), Order(1, 2, 0.0, 1.0, 2.0)])


class TestOrderFiles:
    """Test cases for order CSV files"""

    def test_write_then_read(self, tmp_path):
        """A written order list reads back field for field"""
        orders = generate_orders(0.02, 600.0, 4, seed=3)
        path = write_orders(orders, tmp_path / 'orders.csv')
        back = read_orders(path, stations=[1, 2, 3, 4])
        assert [(o.id, o.station) for o in back] == [(o.id, o.station) for o in orders]
        assert [o.order_t for o in back] == pytest.approx([o.order_t for o in orders])
        assert [o.timeout_t for o in back] == pytest.approx([o.timeout_t for o in orders])

    def test_missing_file(self, tmp_path):
        with pytest.raises(OrderFileError):
            read_orders(tmp_path / 'nope.csv')

    def test_missing_columns(self, tmp_path):
        """Every order column is required"""
        path = tmp_path / 'orders.csv'
        path.write_text("id,station\n1,1\n")
        with pytest.raises(OrderFileError):
            read_orders(path)

    def test_unknown_station(self, tmp_path):
        path = tmp_path / 'orders.csv'
        path.write_text("id,station,order_t,better_t,timeout_t\n1,9,0,10,20\n")
        with pytest.raises(OrderFileError):
            read_orders(path, stations=[1, 2])

    def test_invalid_window(self, tmp_path):
        """Rows that violate the window order are file errors"""
        path = tmp_path / 'orders.csv'
        path.write_text("id,station,order_t,better_t,timeout_t\n1,1,0,30,20\n")
        with pytest.raises(OrderFileError):
            read_orders(path)


@pytest.fixture
def small_trace():
    """Two AGVs, two staff, 100 ticks: AGV 1 drives 20 ticks, AGV 2 is loaded for 20"""
    trace = EventTrace()
    trace.record(0, TraceKind.RUN_START, scheme='one-cycle', n_uavs=1, seed=0, n_staff=2, start_tick=0)
    trace.record(0, TraceKind.SPAWN, vehicle='agv', id=1, node=1)
    trace.record(0, TraceKind.SPAWN, vehicle='agv', id=2, node=7)
    trace.record(10, TraceKind.DEPART, agv=1, **{'from': 1, 'to': 2})
    trace.record(30, TraceKind.NODE, agv=1, node=2)
    trace.record(40, TraceKind.SERVICE_START, service='load', agv=2, staff=1, uav=1)
    trace.record(55, TraceKind.SERVICE_START, service='unload', station=3, uav=5)
    trace.record(60, TraceKind.SERVICE_END, service='load', agv=2, staff=1, uav=1)
    trace.record(70, TraceKind.DEFERRAL, request='takeoff', uav=1, station=1)
    trace.record(80, TraceKind.DELIVERED, order=1, uav=1, station=1, score=50.0)
    trace.record(90, TraceKind.DELIVERED, order=2, uav=2, station=1, score=100.0)
    trace.record(100, TraceKind.RUN_END, orders_issued=3)
    return trace


class TestMetrics:
    """Test cases for trace post-processing"""

    def test_busy_ratios(self, small_trace):
        """Driving and staffed services count; unloading does not"""
        agv, staff = busy_ratios(small_trace)
        assert agv == pytest.approx(40 / 200)
        assert staff == pytest.approx(20 / 200)

    def test_compute_metrics(self, small_trace):
        """One row per run with scores, counts and ratios"""
        report = compute_metrics(small_trace)
        assert (report.scheme, report.n_uavs, report.seed) == ('one-cycle', 1, 0)
        assert report.delivered == 2
        assert report.score_sum == pytest.approx(150.0)
        assert report.score_mean == pytest.approx(75.0)
        assert report.deferrals == 1
        assert report.undelivered == 1

    def test_metrics_csv(self, small_trace, tmp_path):
        """Appending keeps a single header"""
        report = compute_metrics(small_trace)
        path = write_metrics([report], tmp_path / 'metrics.csv')
        write_metrics([report], path, append=True)
        frame = read_metrics(path)
        assert len(frame) == 2
        assert list(frame['delivered']) == [2, 2]

    def test_missing_run_start(self):
        """Metrics need the run header"""
        with pytest.raises(ValueError):
            busy_ratios(EventTrace())


def metrics_rows():
    rows = []
    for seed, delivered_count in ((1, 10), (2, 12)):
        rows.append({'scheme': 'one-cycle', 'n_uavs': 4, 'seed': seed, 'delivered': delivered_count,
                     'score_sum': 100.0 * delivered_count, 'score_mean': 100.0, 'agv_busy': 0.2,
                     'staff_busy': 0.1, 'deferrals': 0, 'anomalies': 0,
                     'orders_issued': 20, 'undelivered': 20 - delivered_count})
    rows.append(dict(rows[0], n_uavs=6, delivered=15, score_sum=1500.0))
    return pd.DataFrame(rows)


def summary_row(scheme, n_uavs, score, agv, staff):
    return {'scheme': scheme, 'n_uavs': n_uavs, 'runs': 1, 'delivered_mean': score / 10,
            'delivered_std': 0.0, 'score_sum_mean': score, 'score_sum_std': 0.0,
            'score_mean_mean': 80.0, 'agv_busy_mean': agv, 'staff_busy_mean': staff,
            'deferrals_mean': 0.0, 'anomalies_mean': 0.0}


def expected_summary():
    """Two-cycle scores best, staff busiest under two-cycle, AGVs busiest under three-cycle"""
    offsets = {'one-cycle': 100.0, 'two-cycle': 200.0, 'three-cycle': 0.0}
    rows = []
    for scheme, offset in offsets.items():
        for step, (n_uavs, base) in enumerate(((8, 1000.0), (12, 1600.0), (16, 1900.0))):
            agv = (0.6 if scheme == 'three-cycle' else 0.3) + 0.1 * step
            staff = (0.5 if scheme == 'two-cycle' else 0.2) + 0.1 * step
            rows.append(summary_row(scheme, n_uavs, base + offset, agv, staff))
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


class TestSweepSummary:
    """Test cases for sweep aggregation and trend checks"""

    def test_mean_and_spread(self):
        """Seeds collapse to mean and sample std; a single run has zero spread"""
        summary = summarize_sweep(metrics_rows())
        assert list(summary.columns) == SUMMARY_COLUMNS
        four = summary[summary['n_uavs'] == 4].iloc[0]
        assert four['runs'] == 2
        assert four['delivered_mean'] == pytest.approx(11.0)
        assert four['delivered_std'] == pytest.approx(2 ** 0.5)
        assert summary[summary['n_uavs'] == 6].iloc[0]['delivered_std'] == 0.0

    def test_empty_sweep(self):
        """No rows still yields the summary header"""
        assert list(summarize_sweep(pd.DataFrame()).columns) == SUMMARY_COLUMNS

    def test_expected_trends_pass(self):
        result = check_trends(expected_summary())
        assert result['passed'], result['violations']

    def test_decreasing_deliveries_flagged(self):
        """Fewer deliveries with more UAVs breaks the monotone trend"""
        summary = expected_summary()
        mask = (summary['scheme'] == 'one-cycle') & (summary['n_uavs'] == 16)
        summary.loc[mask, 'delivered_mean'] = 1.0
        result = check_trends(summary)
        assert not result['passed']
        assert result['violations'][0]['type'] == 'delivered_mean-non-decreasing'

    def test_scheme_order_flagged(self):
        """One-cycle outscoring two-cycle at a large fleet is reported"""
        summary = expected_summary()
        mask = (summary['scheme'] == 'one-cycle') & (summary['n_uavs'] == 12)
        summary.loc[mask, 'score_sum_mean'] = 1850.0
        result = check_trends(summary)
        assert not result['checks']['scheme-score-order']

    def test_plot_written(self, tmp_path):
        """The sweep plot renders without a display"""
        path = plot_summary(expected_summary(), tmp_path / 'plots' / 'sweep.png')
        assert path.exists()
        assert path.stat().st_size > 0
