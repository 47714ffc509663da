import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infopos.core import (
    Boundary,
    CutKind,
    Level,
    LabelSet,
    MetricKind,
    MetricTrace,
    NestingViolation,
    PhaseEvent,
    UnmatchedEvent,
    ValidationError,
    outermost_phase_type,
    pair_phase_events,
    phase_types_in_order,
    validate_samples,
    validate_trace,
)
from infopos.ingest import intervals_to_events, sort_events


def ev(t, p, b, i=0):
    return PhaseEvent(t, p, Boundary(b), i)


def test_valid_three_samples():
    tr = MetricTrace("s", MetricKind.CURRENT, [0, 1, 2], [1.0, 2.0, 3.0])
    assert validate_trace(tr).valid


def test_non_monotonic_reported_at_index_2():
    rep = validate_samples(np.array([0.0, 2.0, 1.0]), np.ones(3))
    assert "non-monotonic at index 2" in rep.findings


def test_nan_value_reported():
    rep = validate_samples(np.array([0.0, 1.0]), np.array([np.nan, 1.0]))
    assert any(f.startswith("non-finite value") for f in rep.findings)


def test_duplicate_and_too_few():
    assert "duplicate timestamp at index 1" in validate_samples(np.zeros(2), np.ones(2)).findings
    assert not validate_samples(np.zeros(1), np.ones(1)).valid


def test_trace_arrays_read_only():
    tr = MetricTrace("s", "Current", [0, 1], [1.0, 2.0])
    with pytest.raises(ValueError):
        tr.values[0] = 5.0


def test_length_mismatch():
    with pytest.raises(ValidationError):
        MetricTrace("s", "Current", [0, 1], [1.0])


def test_pairing_nested_cycle():
    events = [ev(0, "cycle-op", "start"), ev(0.1, "image-op", "start"),
              ev(0.4, "image-op", "end"), ev(0.4, "neural-op", "start"),
              ev(0.9, "neural-op", "end"), ev(1.0, "cycle-op", "end")]
    ivs = pair_phase_events(sort_events(events))
    assert len(ivs) == 3
    by = {iv.phase_type: iv for iv in ivs}
    assert (by["image-op"].start, by["image-op"].end) == (0.1, 0.4)
    assert (by["neural-op"].start, by["neural-op"].end) == (0.4, 0.9)
    assert by["image-op"].parent == ("cycle-op", 0)
    assert by["cycle-op"].contains(by["neural-op"])
    assert phase_types_in_order(ivs) == ["cycle-op", "image-op", "neural-op"]


def test_pairing_empty():
    assert pair_phase_events([]) == []


def test_start_only_is_unmatched():
    with pytest.raises(UnmatchedEvent):
        pair_phase_events([ev(0, "cycle-op", "start")])


def test_end_without_start():
    with pytest.raises(UnmatchedEvent):
        pair_phase_events([ev(1, "cycle-op", "end")])


def test_same_type_overlap_rejected():
    events = [ev(0, "cycle-op", "start", 0), ev(0.5, "cycle-op", "start", 1),
              ev(1, "cycle-op", "end", 0), ev(2, "cycle-op", "end", 1)]
    with pytest.raises(NestingViolation):
        pair_phase_events(events)


def test_inner_outside_outer_rejected():
    events = [ev(0, "cycle-op", "start"), ev(0.5, "image-op", "start"),
              ev(1, "cycle-op", "end"), ev(1.2, "image-op", "end")]
    with pytest.raises(NestingViolation):
        pair_phase_events(sort_events(events))


@st.composite
def event_logs(draw):
    n_cycles = draw(st.integers(1, 6))
    n_inner = draw(st.integers(0, 3))
    t = 0.0
    intervals = []
    from infopos.core import PhaseInterval
    for c in range(n_cycles):
        start = t
        for j in range(n_inner):
            d = draw(st.floats(0.01, 2.0))
            intervals.append(PhaseInterval(t, t + d, f"p{j}", c))
            t += d
        if n_inner == 0:
            t += draw(st.floats(0.01, 2.0))
        intervals.append(PhaseInterval(start, t, "cycle", c))
        t += draw(st.sampled_from([0.0, 0.1]))
    return intervals


@given(event_logs())
def test_pairing_invariants(intervals):
    events = intervals_to_events(intervals)
    out = pair_phase_events(events)
    types = {iv.phase_type for iv in intervals}
    for p in types:
        mine = [iv for iv in out if iv.phase_type == p]
        starts = [e for e in events if e.phase_type == p and e.boundary is Boundary.START]
        ends = [e for e in events if e.phase_type == p and e.boundary is Boundary.END]
        assert len(mine) == len(starts) == len(ends)
        assert [iv.start for iv in mine] == sorted(iv.start for iv in mine)
        for a, b in zip(mine, mine[1:]):
            assert a.end <= b.start
    assert outermost_phase_type(out) == "cycle"


def test_enums_parse():
    assert MetricKind.parse("power") is MetricKind.POWER
    assert CutKind.parse("mid") is CutKind.MID
    assert Level.parse("Poor") is Level.POOR and Level.parse(2) is Level.RICH
    with pytest.raises(ValueError):
        CutKind.parse("quarter")


def test_label_set_configurable():
    assert LabelSet(("Normal", "Overheat", "Throttle")).check("Throttle") == "Throttle"
    with pytest.raises(ValueError):
        LabelSet(("NoFan",))
