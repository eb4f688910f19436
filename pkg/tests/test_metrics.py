import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from loadsched.errors import GridMismatch, ZeroSolarEnergy
from loadsched.loads import table_one
from loadsched.metrics import (
    ExceedanceEvent,
    ExceedanceReport,
    battery_estimate,
    efficiency,
    exceedance,
    write_events_csv,
)
from loadsched.series import PowerSeries


def series(values, dt=60.0, t0=0.0):
    return PowerSeries(t0, dt, np.asarray(values, dtype=float))


def test_no_exceedance():
    r = exceedance(series([1, 1, 1]), series([0.5, 1.0, 0.0]))
    assert r == ExceedanceReport()
    assert r.event_count == 0 and r.total_ee == 0 and r.max_event_ee == 0


def test_five_sample_event():
    actual = np.full(12, 0.5)
    demand = actual.copy()
    demand[3:8] += 0.1
    r = exceedance(series(actual), series(demand))
    assert r.event_count == 1 and r.violation_steps == 5
    ev = r.events[0]
    assert ev.ee == pytest.approx(30.0, rel=1e-12)
    assert (ev.start, ev.end, ev.steps) == (180.0, 420.0, 5)
    assert ev.peak_pe == pytest.approx(0.1)


def test_runs_split_by_one_good_sample():
    r = exceedance(series([1, 1, 1, 1, 1]), series([1.2, 1.1, 1.0, 1.3, 0.0]))
    assert [e.steps for e in r.events] == [2, 1]
    assert r.max_event_ee == pytest.approx(0.3 * 60)


def test_tolerance():
    r = exceedance(series([1, 1]), series([1.05, 1.2]), tol=0.1)
    assert r.violation_steps == 1


def test_efficiency_examples():
    a = series([1, 1])
    assert efficiency(a, series([0.5, 1.5])) == pytest.approx(0.75)
    assert efficiency(a, a) == 1.0
    assert efficiency(a, series([0, 0])) == 0.0
    with pytest.raises(ZeroSolarEnergy):
        efficiency(series([0, 0]), series([0, 0]))
    with pytest.raises(GridMismatch):
        efficiency(a, series([1, 1], t0=30.0))
    with pytest.raises(GridMismatch):
        exceedance(a, series([1, 1, 1]))


def test_battery_examples():
    loads = table_one()
    assert battery_estimate(ExceedanceReport(), loads).max_event_ee == 0.0
    assert battery_estimate(ExceedanceReport(), loads).largest_unit_rule == pytest.approx(360.0)
    events = tuple(ExceedanceEvent(0, 0, 1, ee, 1) for ee in (30.0, 45.0, 12.0))
    report = ExceedanceReport(events, 87.0, 3, 45.0)
    assert battery_estimate(report, loads).max_event_ee == 45.0


def test_events_csv(tmp_path):
    r = exceedance(series([1, 1, 1]), series([1.5, 1.0, 1.25]))
    path = tmp_path / "e.csv"
    write_events_csv(r, path)
    assert path.read_text().splitlines() == ["event_start,event_end,peak_pe,ee", "0,0,0.5,30", "120,120,0.25,15"]


pairs = st.integers(1, 60).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 2), min_size=n, max_size=n),
    st.lists(st.floats(0, 2), min_size=n, max_size=n),
))


@given(pairs, st.floats(0, 0.5))
def test_report_invariants(pair, bump):
    actual, demand = (np.array(x) for x in pair)
    r = exceedance(series(actual), series(demand))
    assert r.total_ee == sum(e.ee for e in r.events)
    assert r.max_event_ee == max((e.ee for e in r.events), default=0.0)
    assert r.violation_steps == sum(e.steps for e in r.events) == int(np.sum(demand > actual))
    for a, b in zip(r.events, r.events[1:]):
        assert a.end + 60.0 < b.start  # disjoint and maximal
    higher = exceedance(series(actual), series(demand + bump))
    assert higher.violation_steps >= r.violation_steps
    assert higher.total_ee >= r.total_ee * (1 - 1e-12)
    if actual.sum() > 0:
        assert 0.0 <= efficiency(series(actual), series(demand)) <= 1.0


@given(pairs, st.integers(1, 59))
def test_split_reports_add_up(pair, cut):
    actual, demand = (np.array(x) for x in pair)
    cut = min(cut, len(actual) - 1)
    if cut < 1 or (demand[cut - 1] > actual[cut - 1] and demand[cut] > actual[cut]):
        return  # the cut would land inside an event
    whole = exceedance(series(actual), series(demand))
    left = exceedance(series(actual[:cut]), series(demand[:cut]))
    right = exceedance(series(actual[cut:], t0=60.0 * cut), series(demand[cut:], t0=60.0 * cut))
    assert whole.events == left.events + right.events
    assert whole.violation_steps == left.violation_steps + right.violation_steps
