"""Domain types shared by every stage: traces, phases, segments, positions."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np


DEFAULT_LABELS = ("Normal", "NoFan", "UnderVolt")
NORMAL = "Normal"
MIN_SEGMENT_SAMPLES = 2


class InfoPosError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(InfoPosError):
    pass


class UnmatchedEvent(InfoPosError):
    pass


class NestingViolation(InfoPosError):
    pass


class EmptyPhase(InfoPosError):
    pass


class EmptySegment(InfoPosError):
    pass


class MetricKind(str, enum.Enum):
    CURRENT = "Current"
    POWER = "Power"
    ENERGY = "Energy"
    # ingestible, but never part of the default metric axis
    VOLTAGE = "Voltage"

    @classmethod
    def parse(cls, name: str | MetricKind) -> MetricKind:
        if isinstance(name, MetricKind):
            return name
        for m in cls:
            if m.value.lower() == str(name).lower():
                return m
        raise ValueError(f"unknown metric {name!r}")

    @property
    def is_default(self) -> bool:
        return self is not MetricKind.VOLTAGE


DEFAULT_METRICS = tuple(m for m in MetricKind if m.is_default)


class CutKind(str, enum.Enum):
    FULL = "Full"
    INI = "Ini"
    MID = "Mid"
    END = "End"

    @classmethod
    def parse(cls, name: str | CutKind) -> CutKind:
        if isinstance(name, CutKind):
            return name
        for c in cls:
            if c.value.lower() == str(name).lower():
                return c
        raise ValueError(f"unknown cut {name!r}")


class Boundary(str, enum.Enum):
    START = "start"
    END = "end"


class Level(enum.IntEnum):
    """Ordinal level on either axis of the information position matrix."""

    POOR = 0
    MODERATE = 1
    RICH = 2

    @classmethod
    def parse(cls, name: str | int | Level) -> Level:
        if isinstance(name, Level):
            return name
        if isinstance(name, int):
            return cls(name)
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ValueError(f"unknown level {name!r}") from None

    @property
    def title(self) -> str:
        return self.name.capitalize()


# Both axes share the ordinal scale; the aliases keep call sites readable.
KnowledgePosition = Level
DataPosition = Level


class InfoPosition(NamedTuple):
    knowledge: Level
    data: Level


class Sample(NamedTuple):
    t: float
    value: float


def _frozen(a: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MetricTrace:
    """Samples of one metric over one scenario run, in run-relative seconds."""

    scenario_id: str
    metric: MetricKind
    t: np.ndarray
    values: np.ndarray
    label: str = NORMAL

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        if self.t.shape != self.values.shape or self.t.ndim != 1:
            raise ValidationError("t and values must be 1-d arrays of equal length")

    def __len__(self) -> int:
        return len(self.t)

    def samples(self) -> Iterator[Sample]:
        for t, v in zip(self.t.tolist(), self.values.tolist()):
            yield Sample(t, v)

    def __eq__(self, other):
        if not isinstance(other, MetricTrace):
            return NotImplemented
        return (
            self.scenario_id == other.scenario_id
            and self.metric == other.metric
            and self.label == other.label
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[str, ...] = ()

    @property
    def valid(self) -> bool:
        return not self.findings


def validate_samples(t: np.ndarray, values: np.ndarray) -> ValidationReport:
    findings = []
    if len(t) < MIN_SEGMENT_SAMPLES:
        findings.append(f"too few samples ({len(t)} < {MIN_SEGMENT_SAMPLES})")
    for i in np.flatnonzero(~np.isfinite(t)):
        findings.append(f"non-finite timestamp at index {i}")
    for i in np.flatnonzero(~np.isfinite(values)):
        findings.append(f"non-finite value at index {i}")
    dt = np.diff(t)
    for i in np.flatnonzero(dt == 0):
        findings.append(f"duplicate timestamp at index {i + 1}")
    for i in np.flatnonzero(dt < 0):
        findings.append(f"non-monotonic at index {i + 1}")
    return ValidationReport(tuple(findings))


def validate_trace(trace: MetricTrace) -> ValidationReport:
    """Report monotonicity, finiteness and duplicate-timestamp problems.

    Never raises; the trace is valid iff the report has no findings.
    """
    return validate_samples(trace.t, trace.values)


@dataclass(frozen=True, order=True)
class PhaseEvent:
    t: float
    phase_type: str
    boundary: Boundary
    instance_id: int

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))


@dataclass(frozen=True, order=True)
class PhaseInterval:
    start: float
    end: float
    phase_type: str
    instance_id: int
    parent: tuple[str, int] | None = None

    @property
    def duration(self) -> float:
        return self.end - self.start

    def contains(self, other: PhaseInterval) -> bool:
        return self.start <= other.start and other.end <= self.end


def pair_phase_events(events: Sequence[PhaseEvent]) -> list[PhaseInterval]:
    """Match Start/End events into intervals and check nesting.

    The outermost phase type is the one whose intervals enclose all others
    (``cycle-op`` in the reference machine). Every inner interval must sit
    inside exactly one outer interval; outer intervals may not overlap.
    """
    open_: dict[tuple[str, int], float] = {}
    raw: list[tuple[float, float, str, int]] = []
    for ev in events:
        key = (ev.phase_type, ev.instance_id)
        if ev.boundary is Boundary.START:
            if key in open_:
                raise UnmatchedEvent(f"second start for {key} at t={ev.t}")
            open_[key] = ev.t
        else:
            if key not in open_:
                raise UnmatchedEvent(f"end without start for {key} at t={ev.t}")
            start = open_.pop(key)
            if not ev.t > start:
                raise UnmatchedEvent(f"end not after start for {key} at t={ev.t}")
            raw.append((start, ev.t, ev.phase_type, ev.instance_id))
    if open_:
        key, t = next(iter(open_.items()))
        raise UnmatchedEvent(f"start without end for {key} at t={t}")
    if not raw:
        return []

    by_type: dict[str, list[tuple[float, float, str, int]]] = {}
    for r in sorted(raw):
        by_type.setdefault(r[2], []).append(r)
    for ptype, rows in by_type.items():
        for a, b in zip(rows, rows[1:]):
            if b[0] < a[1]:
                raise NestingViolation(
                    f"{ptype} instances {a[3]} and {b[3]} overlap")

    outer = outermost_phase_type(raw)
    cycles = by_type[outer]
    starts = np.array([c[0] for c in cycles])
    out = []
    for start, end, ptype, inst in sorted(raw):
        if ptype == outer:
            out.append(PhaseInterval(start, end, ptype, inst))
            continue
        j = int(np.searchsorted(starts, start, side="right")) - 1
        if j < 0 or not (cycles[j][0] <= start and end <= cycles[j][1]):
            raise NestingViolation(
                f"{ptype} instance {inst} [{start}, {end}) is not inside any {outer}")
        out.append(PhaseInterval(start, end, ptype, inst, (outer, cycles[j][3])))
    return out


def outermost_phase_type(intervals) -> str:
    """Phase type with the longest total span; ties go to the earliest start."""
    span: dict[str, float] = {}
    first: dict[str, float] = {}
    for item in intervals:
        if isinstance(item, PhaseInterval):
            start, end, ptype = item.start, item.end, item.phase_type
        else:
            start, end, ptype = item[0], item[1], item[2]
        span[ptype] = span.get(ptype, 0.0) + (end - start)
        first[ptype] = min(first.get(ptype, start), start)
    return min(span, key=lambda p: (-span[p], first[p], p))


def phase_types_in_order(intervals: Sequence[PhaseInterval]) -> list[str]:
    """Outermost phase type first, then inner types by first appearance."""
    if not intervals:
        return []
    outer = outermost_phase_type(intervals)
    seen = [outer]
    for iv in sorted(intervals):
        if iv.phase_type not in seen:
            seen.append(iv.phase_type)
    return seen


@dataclass(frozen=True, eq=False)
class Segment:
    """A contiguous slice of a trace; samples lie in ``[t_start, t_end)``."""

    scenario_id: str
    metric: MetricKind
    phase_type: str
    cut: CutKind
    label: str
    t: np.ndarray
    values: np.ndarray
    t_start: float
    t_end: float
    instance_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "t", _frozen(self.t))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "metric", MetricKind.parse(self.metric))
        object.__setattr__(self, "cut", CutKind.parse(self.cut))
        if self.t.shape != self.values.shape:
            raise ValidationError("t and values must have equal length")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def key(self) -> tuple[str, MetricKind, CutKind]:
        return (self.phase_type, self.metric, self.cut)

    def samples(self) -> Iterator[Sample]:
        for t, v in zip(self.t.tolist(), self.values.tolist()):
            yield Sample(t, v)

    def replace(self, **changes) -> Segment:
        fields = {f: getattr(self, f) for f in self.__dataclass_fields__}
        fields.update(changes)
        return Segment(**fields)

    def __eq__(self, other):
        if not isinstance(other, Segment):
            return NotImplemented
        return (
            (self.scenario_id, self.metric, self.phase_type, self.cut, self.label,
             self.t_start, self.t_end, self.instance_id)
            == (other.scenario_id, other.metric, other.phase_type, other.cut,
                other.label, other.t_start, other.t_end, other.instance_id)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class LabelSet:
    """Closed set of behaviour classes for one experiment; must contain Normal."""

    names: tuple[str, ...] = DEFAULT_LABELS

    def __post_init__(self):
        if NORMAL not in self.names:
            raise ValueError("label set must contain 'Normal'")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate labels in label set")

    def check(self, label: str) -> str:
        if label not in self.names:
            raise ValueError(f"label {label!r} not in {self.names}")
        return label
