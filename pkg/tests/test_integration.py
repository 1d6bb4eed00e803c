"""
Integration tests for hour-long runs

These replay the full acceptance setting (16 UAVs, one simulated hour per
scheme) and audit every trace, rebuild final states from a trace, watch
the UAV carriage rule tick by tick and run a small sweep. Select them
with ``pytest -m slow``.
"""

import pandas as pd
import pytest

from uavport.cli.main import EXIT_OK, main
from uavport.domain import ScenarioConfig, SchemeName
from uavport.fsm import AgvState, UavState
from uavport.orders import check_trends, compute_metrics
from uavport.sim import Engine, run
from uavport.trace import EventTrace, TraceKind
from uavport.verify import TraceVerifier, format_report


@pytest.fixture(scope='module')
def hour_runs(tmp_path_factory):
    """One finished hour per scheme, written to disk and read back"""
    out = tmp_path_factory.mktemp('hour')
    traces = {}
    for scheme in SchemeName:
        engine = run(ScenarioConfig.default(scheme, n_uavs=16, seed=1))
        path = engine.trace.write_jsonl(out / f'{scheme.value}.jsonl')
        traces[scheme.value] = EventTrace.read_jsonl(path)
    return traces


@pytest.mark.slow
class TestHourRuns:
    """End-to-end checks over full-length runs"""

    @pytest.mark.parametrize('scheme', [s.value for s in SchemeName])
    def test_trace_satisfies_every_invariant(self, hour_runs, scheme):
        """Independent audit of the written trace"""
        result = TraceVerifier().analyze(hour_runs[scheme])
        assert result['passed'], format_report(result)

    @pytest.mark.parametrize('scheme', [s.value for s in SchemeName])
    def test_full_length_and_deliveries(self, hour_runs, scheme):
        """36000 ticks and a busy fleet delivering orders"""
        trace = hour_runs[scheme]
        assert trace.last_tick == 36000
        report = compute_metrics(trace)
        assert report.delivered > 0
        assert 0.0 < report.agv_busy <= 1.0
        assert 0.0 < report.staff_busy <= 1.0

    @pytest.mark.parametrize('scheme', [s.value for s in SchemeName])
    def test_no_dead_letters_or_faults(self, hour_runs, scheme):
        """The master only addresses vehicles that exist and no driver faults"""
        trace = hour_runs[scheme]
        assert trace.count(TraceKind.DEAD_LETTER) == 0
        assert not [e for e in trace.of_kind(TraceKind.ANOMALY) if e['reason'] == 'driver-fault']

    def test_two_cycle_scores_at_least_three_cycle(self, hour_runs):
        """With 16 UAVs the two-cycle scheme does not score below the three-cycle scheme"""
        scores = {s: compute_metrics(t).score_sum for s, t in hour_runs.items()}
        assert scores['two-cycle'] >= scores['three-cycle']


@pytest.fixture(scope='module')
def watched_run():
    """A twenty-minute two-cycle run stepped by hand, with the carriage rule checked after every tick"""
    engine = Engine(ScenarioConfig.default('two-cycle', n_uavs=8, duration_s=1200.0, seed=2))
    engine.start()
    breaches = []
    for _ in range(engine.config.total_ticks):
        engine.step()
        for uid, driver in sorted(engine.uav_node.drivers.items()):
            if driver.state not in (UavState.ON_CAR, UavState.WAITTING_GO):
                continue
            agv = engine.world.agvs.get(engine.world.uavs[uid].mounted_on)
            if agv is None or agv.carrying != uid:
                breaches.append((engine.tick, uid, driver.state.value))
    engine.finish()
    return engine, breaches


@pytest.mark.slow
class TestTraceCompleteness:
    """The trace alone is enough to rebuild where every vehicle ended up"""

    def test_replayed_states_match_the_drivers(self, watched_run):
        """Folding the transitions from the initial states gives each driver's final state"""
        engine, _ = watched_run
        current = {}
        for spawn in engine.trace.of_kind(TraceKind.SPAWN):
            initial = UavState.READY if spawn['vehicle'] == 'uav' else AgvState.WAITTING_PICKUP
            current[(spawn['vehicle'], spawn['id'])] = initial.value
        for event in engine.trace.of_kind(TraceKind.STATE_TRANSITION):
            key = (event['vehicle'], event['id'])
            assert current[key] == event['from'], f"tick {event.tick}: {key} jumped"
            current[key] = event['to']
        for uid in engine.uav_node.drivers:
            assert current[('uav', uid)] == engine.uav_node.state_of(uid).value
        for aid in engine.agv_node.drivers:
            assert current[('agv', aid)] == engine.agv_node.state_of(aid).value

    def test_uav_on_car_only_while_carried(self, watched_run):
        """A UAV in On_Car or Waitting_Go always sits on an AGV that has it"""
        engine, breaches = watched_run
        assert breaches == []
        assert engine.trace.count(TraceKind.DELIVERED) > 0


@pytest.mark.slow
class TestSweepTrends:
    """A small real sweep shows the expected growth with fleet size"""

    def test_half_hour_sweep(self, tmp_path):
        out = tmp_path / 'sweep'
        code = main(['sweep', '--uav-counts', '4,8,12', '--seeds', '1', '--duration', '1800',
                     '--out', str(out)])
        assert code == EXIT_OK
        summary = pd.read_csv(out / 'sweep_summary.csv')
        assert len(summary) == 9
        result = check_trends(summary)
        assert result['checks']['delivered_mean-non-decreasing'], result['violations']
        assert result['checks']['agv_busy_mean-non-decreasing'], result['violations']
        assert 'scheme-score-order' in result['checks']
