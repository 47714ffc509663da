"""Informed (phase-based) and uninformed (time-quartile) segmentation.

All intervals are half-open, ``[start, end)``, so the quartile cuts of a
segment partition its samples exactly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    MIN_SEGMENT_SAMPLES,
    CutKind,
    EmptyPhase,
    EmptySegment,
    Level,
    MetricTrace,
    PhaseInterval,
    Segment,
    outermost_phase_type,
    phase_types_in_order,
)
from .ingest import fmt

ALL = "all"
ALL_CUTS = (CutKind.FULL, CutKind.INI, CutKind.MID, CutKind.END)


def informed_cut(trace: MetricTrace, intervals: Sequence[PhaseInterval],
                 phase_type: str) -> list[Segment]:
    """One Full segment per interval of ``phase_type``, sorted by start time."""
    chosen = sorted(iv for iv in intervals if iv.phase_type == phase_type)
    if not chosen:
        raise EmptyPhase(f"{trace.scenario_id}: no {phase_type!r} intervals")
    starts = np.array([iv.start for iv in chosen])
    ends = np.array([iv.end for iv in chosen])
    lo = np.searchsorted(trace.t, starts, side="left")
    hi = np.searchsorted(trace.t, ends, side="left")
    out = []
    for iv, a, b in zip(chosen, lo.tolist(), hi.tolist()):
        if b - a < MIN_SEGMENT_SAMPLES:
            raise EmptySegment(
                f"{trace.scenario_id}: {phase_type} instance {iv.instance_id} "
                f"has {b - a} samples in [{iv.start}, {iv.end})")
        out.append(Segment(trace.scenario_id, trace.metric, phase_type, CutKind.FULL,
                           trace.label, trace.t[a:b], trace.values[a:b],
                           iv.start, iv.end, iv.instance_id))
    return out


def quartile_bounds(t_start: float, t_end: float, cut: CutKind) -> tuple[float, float]:
    d = t_end - t_start
    q1 = t_start + 0.25 * d
    q3 = t_start + 0.75 * d
    return {
        CutKind.FULL: (t_start, t_end),
        CutKind.INI: (t_start, q1),
        CutKind.MID: (q1, q3),
        CutKind.END: (q3, t_end),
    }[cut]


def uninformed_cut(segment: Segment, cut: CutKind | str) -> Segment:
    """Restrict a Full segment to a quarter-based slice of its time span.

    Ini is the first quarter, Mid the middle two quarters and End the last
    quarter of ``[t_start, t_end)``; Full returns the segment unchanged.
    """
    cut = CutKind.parse(cut)
    if segment.cut is not CutKind.FULL:
        raise ValueError(f"uninformed_cut expects a Full segment, got {segment.cut.value}")
    if cut is CutKind.FULL:
        return segment
    a, b = quartile_bounds(segment.t_start, segment.t_end, cut)
    lo, hi = np.searchsorted(segment.t, [a, b], side="left").tolist()
    if hi - lo < MIN_SEGMENT_SAMPLES:
        raise EmptySegment(
            f"{segment.scenario_id}: {segment.phase_type} instance {segment.instance_id} "
            f"{cut.value} cut has {hi - lo} samples")
    return segment.replace(cut=cut, t=segment.t[lo:hi], values=segment.values[lo:hi],
                           t_start=a, t_end=b)


def parse_selector(selector: str, phase_types: Sequence[str]) -> tuple[str, ...]:
    """Expand a phase selector into its member phase types.

    ``"all"`` means every phase type; ``"a + b"`` is the union of a and b.
    """
    if selector.strip() == ALL:
        return tuple(phase_types)
    members = tuple(p.strip() for p in selector.split("+"))
    if not all(members):
        raise ValueError(f"malformed selector {selector!r}")
    return members


def default_selectors(phase_types: Sequence[str]) -> list[str]:
    """Outermost type, each inner type, ``all``, then the union of inner types."""
    phase_types = list(phase_types)
    out = list(phase_types)
    if len(phase_types) > 1:
        out.append(ALL)
    inner = phase_types[1:]
    if len(inner) > 1:
        out.append(" + ".join(inner))
    return out


def selector_allowed(level: Level, selector: str, outer: str) -> bool:
    """Poor knowledge sees only the outermost phase; Moderate adds single inner
    phases; Rich also permits ``all`` and unions."""
    if level >= Level.RICH:
        return True
    members = parse_selector(selector, [outer]) if selector.strip() != ALL else None
    if members is None:
        return False
    if level == Level.POOR:
        return members == (outer,)
    return len(members) == 1


@dataclass(frozen=True)
class SegmentationPlan:
    knowledge: Level
    selectors: tuple[str, ...]
    cuts: tuple[CutKind, ...] = ALL_CUTS

    @classmethod
    def for_knowledge(cls, knowledge: Level, intervals: Sequence[PhaseInterval],
                      cuts: Sequence[CutKind] = ALL_CUTS) -> SegmentationPlan:
        types = phase_types_in_order(intervals)
        outer = types[0]
        sels = tuple(s for s in default_selectors(types) if selector_allowed(knowledge, s, outer))
        return cls(Level.parse(knowledge), sels, tuple(CutKind.parse(c) for c in cuts))

    def check(self, outer: str) -> None:
        for s in self.selectors:
            if not selector_allowed(self.knowledge, s, outer):
                raise ValueError(
                    f"selector {s!r} needs more than {self.knowledge.title} knowledge")


def cut_selector(trace: MetricTrace, intervals: Sequence[PhaseInterval],
                 selector: str, cut: CutKind) -> list[Segment]:
    """Segments for one (selector, cut); unions concatenate member lists."""
    types = phase_types_in_order(intervals)
    out = []
    for ptype in parse_selector(selector, types):
        out.extend(uninformed_cut(s, cut) for s in informed_cut(trace, intervals, ptype))
    return out


def apply_plan(trace: MetricTrace, intervals: Sequence[PhaseInterval],
               plan: SegmentationPlan) -> dict[tuple[str, CutKind], list[Segment]]:
    """Cartesian product of the plan's selectors and cuts, in plan order."""
    if intervals:
        plan.check(outermost_phase_type(intervals))
    groups = {}
    for sel in plan.selectors:
        for cut in plan.cuts:
            groups[(sel, cut)] = cut_selector(trace, intervals, sel, cut)
    return groups


SEGMENT_HEADER = ["scenario_id", "metric", "phase_type", "cut", "label", "instance",
                  "t_start", "t_end", "t", "value"]


def write_segments_csv(segments: Sequence[Segment], path) -> None:
    """Long format, one row per sample; segment bounds repeat on every row."""
    buf = io.StringIO()
    buf.write(",".join(SEGMENT_HEADER) + "\n")
    for s in segments:
        head = (f"{s.scenario_id},{s.metric.value},{s.phase_type},{s.cut.value},{s.label},"
                f"{s.instance_id},{fmt(s.t_start)},{fmt(s.t_end)},")
        for t, v in zip(s.t.tolist(), s.values.tolist()):
            buf.write(f"{head}{fmt(t)},{fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_segments_csv(path) -> list[Segment]:
    groups: dict[tuple, tuple[list[float], list[float]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SEGMENT_HEADER:
            raise ValueError(f"{path}: unexpected segment header {header}")
        for row in reader:
            if not row:
                continue
            key = tuple(row[:8])
            t, v = groups.setdefault(key, ([], []))
            t.append(float(row[8]))
            v.append(float(row[9]))
    out = []
    for (sid, metric, ptype, cut, label, inst, a, b), (t, v) in groups.items():
        out.append(Segment(sid, metric, ptype, cut, label, t, v, float(a), float(b), int(inst)))
    return out
