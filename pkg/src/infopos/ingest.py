"""Readers and writers for the canonical file formats, plus a seeded generator.

File formats (UTF-8, LF, ``.`` decimal point):

* trace CSV: header ``t,value``; ``t`` is rebased so the first row is 0.
* event CSV: header ``t,phase_type,boundary,instance``; boundary is
  ``start`` or ``end``.
* catalog: JSON object ``{"format": "infopos-catalog", "version": 1,
  "scenarios": [...]}``; each scenario carries ``scenario_id``,
  ``input_batch``, ``core_type``, ``repetition_count``, ``label``,
  ``traces`` (metric name -> CSV path) and ``events`` (CSV path). Paths are
  relative to the catalog file.

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``; ``standard_normal`` on that generator is deterministic for
a given seed on every platform numpy supports.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import (
    NORMAL,
    Boundary,
    InfoPosError,
    MetricKind,
    MetricTrace,
    PhaseEvent,
    PhaseInterval,
    ValidationError,
    pair_phase_events,
    validate_samples,
)

CATALOG_FORMAT = "infopos-catalog"
CATALOG_VERSION = 1
TRACE_HEADER = ["t", "value"]
EVENT_HEADER = ["t", "phase_type", "boundary", "instance"]


class ParseError(InfoPosError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class UnknownBoundary(ParseError):
    pass


class MissingFile(InfoPosError):
    pass


class DuplicateScenario(InfoPosError):
    pass


def make_rng(*keys: int) -> np.random.Generator:
    """PCG64 generator keyed by a tuple of non-negative integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(keys))))


def fmt(x: float) -> str:
    """Shortest round-trip-exact decimal form of a float."""
    return repr(float(x))


def _read_rows(path, header: list[str]) -> list[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or [h.strip() for h in rows[0]] != header:
        got = rows[0] if rows else []
        raise ParseError(path, 1, f"expected header {','.join(header)}, got {','.join(got)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
        out.append((lineno, [c.strip() for c in row]))
    return out


def _float(path, lineno: int, text: str, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(path, lineno, f"cannot parse {column} {text!r} as a number") from None


def read_trace_csv(path, metric: MetricKind | str, scenario_id: str | None = None,
                   label: str = NORMAL) -> MetricTrace:
    rows = _read_rows(path, TRACE_HEADER)
    t = np.array([_float(path, ln, r[0], "t") for ln, r in rows])
    v = np.array([_float(path, ln, r[1], "value") for ln, r in rows])
    if len(t):
        t = t - t[0]
    report = validate_samples(t, v)
    if not report.valid:
        raise ValidationError(f"{path}: " + "; ".join(report.findings))
    sid = scenario_id if scenario_id is not None else Path(path).stem
    return MetricTrace(sid, MetricKind.parse(metric), t, v, label)


def write_trace_csv(trace: MetricTrace, path) -> None:
    buf = io.StringIO()
    buf.write("t,value\n")
    for t, v in zip(trace.t.tolist(), trace.values.tolist()):
        buf.write(f"{fmt(t)},{fmt(v)}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_phase_events_csv(path) -> list[PhaseEvent]:
    events = []
    for lineno, (t, ptype, boundary, inst) in _read_rows(path, EVENT_HEADER):
        try:
            b = Boundary(boundary.lower())
        except ValueError:
            raise UnknownBoundary(path, lineno, f"unknown boundary {boundary!r}") from None
        try:
            instance = int(inst)
        except ValueError:
            raise ParseError(path, lineno, f"cannot parse instance {inst!r}") from None
        events.append(PhaseEvent(_float(path, lineno, t, "t"), ptype, b, instance))
    return sort_events(events)


def sort_events(events: Sequence[PhaseEvent]) -> list[PhaseEvent]:
    # at equal t an End closes before the next Start opens
    return sorted(events, key=lambda e: (e.t, e.boundary is Boundary.START, e.phase_type, e.instance_id))


def write_phase_events_csv(events: Sequence[PhaseEvent], path) -> None:
    buf = io.StringIO()
    buf.write(",".join(EVENT_HEADER) + "\n")
    for e in events:
        buf.write(f"{fmt(e.t)},{e.phase_type},{e.boundary.value},{e.instance_id}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def intervals_to_events(intervals: Sequence[PhaseInterval]) -> list[PhaseEvent]:
    events = []
    for iv in intervals:
        events.append(PhaseEvent(iv.start, iv.phase_type, Boundary.START, iv.instance_id))
        events.append(PhaseEvent(iv.end, iv.phase_type, Boundary.END, iv.instance_id))
    return sort_events(events)


# --------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class ScenarioMeta:
    scenario_id: str
    input_batch: str
    core_type: str
    repetition_count: int
    label: str
    traces: Mapping[MetricKind, Path]
    events: Path

    def to_json(self, root: Path | None = None) -> dict:
        def rel(p: Path) -> str:
            return Path(os.path.relpath(p, root)).as_posix() if root else Path(p).as_posix()

        return {
            "scenario_id": self.scenario_id,
            "input_batch": self.input_batch,
            "core_type": self.core_type,
            "repetition_count": self.repetition_count,
            "label": self.label,
            "traces": {m.value: rel(p) for m, p in self.traces.items()},
            "events": rel(self.events),
        }


def load_catalog(path) -> list[ScenarioMeta]:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") != CATALOG_FORMAT:
        raise ParseError(path, 1, f"not a catalog (format={doc.get('format')!r})")
    root = path.parent
    seen = set()
    out = []
    for entry in doc.get("scenarios", []):
        sid = str(entry["scenario_id"])
        if sid in seen:
            raise DuplicateScenario(sid)
        seen.add(sid)
        traces = {MetricKind.parse(m): root / p for m, p in entry["traces"].items()}
        events = root / entry["events"]
        for p in [*traces.values(), events]:
            if not p.exists():
                raise MissingFile(f"scenario {sid}: {p}")
        out.append(ScenarioMeta(
            sid, str(entry.get("input_batch", "")), str(entry.get("core_type", "")),
            int(entry.get("repetition_count", 1)), str(entry["label"]), traces, events))
    return out


def write_catalog(metas: Sequence[ScenarioMeta], path) -> None:
    path = Path(path)
    doc = {
        "format": CATALOG_FORMAT,
        "version": CATALOG_VERSION,
        "scenarios": [m.to_json(path.parent) for m in metas],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8", newline="\n")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One scenario run held in memory: its metric traces and phase intervals."""

    meta: ScenarioMeta
    traces: Mapping[MetricKind, MetricTrace]
    intervals: tuple[PhaseInterval, ...]

    @property
    def scenario_id(self) -> str:
        return self.meta.scenario_id

    @property
    def label(self) -> str:
        return self.meta.label


def load_corpus(catalog_path) -> list[Scenario]:
    out = []
    for meta in load_catalog(catalog_path):
        traces = {m: read_trace_csv(p, m, meta.scenario_id, meta.label)
                  for m, p in meta.traces.items()}
        intervals = tuple(pair_phase_events(read_phase_events_csv(meta.events)))
        out.append(Scenario(meta, traces, intervals))
    return out


def write_corpus(corpus: Sequence[Scenario], out_dir) -> Path:
    """Write traces, event logs and ``catalog.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    (out_dir / "events").mkdir(parents=True, exist_ok=True)
    metas = []
    for sc in corpus:
        sid = sc.scenario_id
        paths = {}
        for m, trace in sc.traces.items():
            p = out_dir / "traces" / f"{sid}.{m.value.lower()}.csv"
            write_trace_csv(trace, p)
            paths[m] = p
        ev = out_dir / "events" / f"{sid}.events.csv"
        write_phase_events_csv(intervals_to_events(sc.intervals), ev)
        metas.append(ScenarioMeta(sid, sc.meta.input_batch, sc.meta.core_type,
                                  sc.meta.repetition_count, sc.label, paths, ev))
    cat = out_dir / "catalog.json"
    write_catalog(metas, cat)
    return cat


# --------------------------------------------------------------------------
# adapter for foreign CSV layouts


@dataclass(frozen=True)
class ColumnMapping:
    """How to read a foreign trace file into the canonical schema.

    ``time_scale`` multiplies raw time values into seconds (e.g. 1e-3 for ms).
    """

    time_column: str
    value_columns: Mapping[str, str]
    time_scale: float = 1.0
    delimiter: str = ","

    @classmethod
    def from_json(cls, doc: Mapping) -> ColumnMapping:
        return cls(doc["time_column"], dict(doc["value_columns"]),
                   float(doc.get("time_scale", 1.0)), doc.get("delimiter", ","))


def adapt_trace_csv(path, mapping: ColumnMapping, metric: MetricKind | str,
                    scenario_id: str | None = None, label: str = NORMAL) -> MetricTrace:
    metric = MetricKind.parse(metric)
    column = mapping.value_columns[metric.value]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=mapping.delimiter)
        t, v = [], []
        for lineno, row in enumerate(reader, start=2):
            t.append(_float(path, lineno, row[mapping.time_column], mapping.time_column))
            v.append(_float(path, lineno, row[column], column))
    t = np.asarray(t) * mapping.time_scale
    if len(t):
        t = t - t[0]
    v = np.asarray(v)
    report = validate_samples(t, v)
    if not report.valid:
        raise ValidationError(f"{path}: " + "; ".join(report.findings))
    return MetricTrace(scenario_id or Path(path).stem, metric, t, v, label)


# --------------------------------------------------------------------------
# synthetic generator


@dataclass(frozen=True)
class PhaseTemplate:
    """Shape of one inner phase: ``base + slope*tau + curvature*tau**2``.

    ``tau`` is seconds since the phase started.
    """

    name: str
    duration_mean: float
    duration_sd: float = 0.0
    base: float = 1.0
    slope: float = 0.0
    curvature: float = 0.0


@dataclass(frozen=True)
class LabelEffect:
    """Anomaly signature added on top of the Normal baseline.

    ``drift`` is metric units per second since the start of the cycle
    (cooling-failure analog); ``dip_depth``/``dip_period`` give a square wave
    that is low for the second half of every period (under-volt analog).
    ``phases`` restricts the effect to the named inner phases.
    """

    drift: float = 0.0
    dip_depth: float = 0.0
    dip_period: float = 1.0
    extra_noise_sd: float = 0.0
    phases: tuple[str, ...] | None = None

    @property
    def is_zero(self) -> bool:
        return self.drift == 0 and self.dip_depth == 0 and self.extra_noise_sd == 0


DEFAULT_EFFECTS = {
    "NoFan": LabelEffect(drift=0.25),
    "UnderVolt": LabelEffect(dip_depth=0.12, dip_period=0.2),
}


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    cycles: int = 10
    sample_rate: float = 100.0
    phases: tuple[PhaseTemplate, ...] = (
        PhaseTemplate("image-op", 0.30, 0.02, 1.0, 0.4, 0.0),
        PhaseTemplate("neural-op", 0.60, 0.03, 1.6, 0.5, -0.4),
    )
    outer_phase: str = "cycle-op"
    label: str = NORMAL
    effects: Mapping[str, LabelEffect] = field(default_factory=lambda: dict(DEFAULT_EFFECTS))
    noise_sd: float = 0.02
    idle_gap: float = 0.0
    metric: MetricKind = MetricKind.CURRENT
    scenario_id: str = "synth"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be > 0")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        for p in self.phases:
            if p.duration_mean <= 0:
                raise ValueError(f"phase {p.name}: duration must be > 0")
        if not self.effects.get(NORMAL, LabelEffect()).is_zero:
            raise ValueError("the Normal effect must be all-zero")

    def effect(self) -> LabelEffect:
        return self.effects.get(self.label, LabelEffect())


def synth_generate(spec: SynthSpec) -> tuple[MetricTrace, list[PhaseEvent]]:
    """Generate one labelled trace and its phase-event log.

    Durations and noise are drawn before any label effect is applied, so two
    specs that differ only in label share timing and noise sample-for-sample.
    """
    ss = np.random.SeedSequence(spec.seed)
    timing_ss, noise_ss, extra_ss = ss.spawn(3)
    n_ph = len(spec.phases)
    rng = np.random.Generator(np.random.PCG64(timing_ss))
    z = rng.standard_normal((spec.cycles, n_ph))
    means = np.array([p.duration_mean for p in spec.phases])
    sds = np.array([p.duration_sd for p in spec.phases])
    durations = np.maximum(means + sds * z, 0.1 * means)

    intervals = []
    t = 0.0
    for c in range(spec.cycles):
        cycle_start = t
        for j, p in enumerate(spec.phases):
            end = t + float(durations[c, j])
            intervals.append(PhaseInterval(t, end, p.name, c))
            t = end
        intervals.append(PhaseInterval(cycle_start, t, spec.outer_phase, c))
        t += spec.idle_gap
    t_total = intervals[-1].end if spec.idle_gap == 0 else t

    n = int(np.floor(t_total * spec.sample_rate)) + 1
    ts = np.arange(n) / spec.sample_rate
    values = np.full(n, spec.phases[0].base)
    phase_idx = np.full(n, -1)
    cycle_start = np.zeros(n)
    for iv in intervals:
        if iv.phase_type == spec.outer_phase:
            lo, hi = np.searchsorted(ts, [iv.start, iv.end])
            cycle_start[lo:hi] = iv.start
            continue
        j = next(k for k, p in enumerate(spec.phases) if p.name == iv.phase_type)
        p = spec.phases[j]
        lo, hi = np.searchsorted(ts, [iv.start, iv.end])
        tau = ts[lo:hi] - iv.start
        values[lo:hi] = p.base + p.slope * tau + p.curvature * tau ** 2
        phase_idx[lo:hi] = j

    eff = spec.effect()
    if eff.phases is None:
        mask = phase_idx >= 0
    else:
        wanted = [k for k, p in enumerate(spec.phases) if p.name in eff.phases]
        mask = np.isin(phase_idx, wanted)
    since = ts - cycle_start
    if eff.drift:
        values = values + np.where(mask, eff.drift * since, 0.0)
    if eff.dip_depth:
        low = np.floor(since / (eff.dip_period / 2.0)) % 2 == 1
        values = values - np.where(mask & low, eff.dip_depth, 0.0)

    noise = np.random.Generator(np.random.PCG64(noise_ss)).standard_normal(n)
    extra = np.random.Generator(np.random.PCG64(extra_ss)).standard_normal(n)
    values = values + spec.noise_sd * noise
    if eff.extra_noise_sd:
        values = values + np.where(mask, eff.extra_noise_sd * extra, 0.0)

    trace = MetricTrace(spec.scenario_id, spec.metric, ts, values, spec.label)
    return trace, intervals_to_events(intervals)


@dataclass(frozen=True)
class CorpusSpec:
    """A factorial grid of synthetic scenarios (batch x core x repetitions x label).

    Core type scales metric levels, input batch scales phase durations and
    the repetition count multiplies the number of cycles.
    """

    seed: int = 0
    template: SynthSpec = SynthSpec()
    input_batches: Mapping[str, float] = field(default_factory=lambda: {"batch1": 1.0, "batch2": 1.15})
    core_types: Mapping[str, float] = field(default_factory=lambda: {"core1": 1.0, "core2": 1.25})
    repetitions: Sequence[int] = (1, 2)
    labels: Sequence[str] = ("Normal", "NoFan", "UnderVolt")
    metrics: Sequence[MetricKind] = (MetricKind.CURRENT, MetricKind.POWER, MetricKind.ENERGY)
    supply_voltage: float = 5.0

    def scenario_grid(self):
        for b in self.input_batches:
            for c in self.core_types:
                for r in self.repetitions:
                    for lab in self.labels:
                        yield b, c, r, lab


def synth_corpus(spec: CorpusSpec) -> list[Scenario]:
    """Generate every scenario of the grid in a fixed order."""
    out = []
    for i, (batch, core, reps, label) in enumerate(spec.scenario_grid()):
        sid = f"{batch}-{core}-r{reps}-{label}"
        dscale = spec.input_batches[batch]
        lscale = spec.core_types[core]
        phases = tuple(
            PhaseTemplate(p.name, p.duration_mean * dscale, p.duration_sd * dscale,
                          p.base * lscale, p.slope * lscale, p.curvature * lscale)
            for p in spec.template.phases)
        seed = int(np.random.SeedSequence([spec.seed, i]).generate_state(1)[0])
        sspec = SynthSpec(
            seed=seed, cycles=spec.template.cycles * reps,
            sample_rate=spec.template.sample_rate, phases=phases,
            outer_phase=spec.template.outer_phase, label=label,
            effects=spec.template.effects, noise_sd=spec.template.noise_sd * lscale,
            idle_gap=spec.template.idle_gap, metric=MetricKind.CURRENT, scenario_id=sid)
        current, events = synth_generate(sspec)
        traces = {}
        for m in spec.metrics:
            traces[MetricKind.parse(m)] = derive_metric(current, MetricKind.parse(m), spec.supply_voltage)
        meta = ScenarioMeta(sid, batch, core, reps, label,
                            {m: Path(f"traces/{sid}.{m.value.lower()}.csv") for m in traces},
                            Path(f"events/{sid}.events.csv"))
        out.append(Scenario(meta, traces, tuple(pair_phase_events(events))))
    return out


def derive_metric(current: MetricTrace, metric: MetricKind, voltage: float) -> MetricTrace:
    """Power and energy from a current trace at a constant supply voltage."""
    if metric is MetricKind.CURRENT:
        return current
    if metric is MetricKind.VOLTAGE:
        v = np.full(len(current), voltage)
    elif metric is MetricKind.POWER:
        v = voltage * current.values
    else:
        p = voltage * current.values
        v = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(current.t))])
    return MetricTrace(current.scenario_id, metric, current.t, v, current.label)


def synth_spec_from_json(doc: Mapping) -> SynthSpec:
    phases = tuple(PhaseTemplate(**p) for p in doc.get("phases", [])) or SynthSpec.phases
    effects = {} if "effects" in doc else dict(DEFAULT_EFFECTS)
    for lab, e in doc.get("effects", {}).items():
        e = dict(e)
        if e.get("phases") is not None:
            e["phases"] = tuple(e["phases"])
        effects[lab] = LabelEffect(**e)
    kw = {k: doc[k] for k in ("seed", "cycles", "sample_rate", "outer_phase", "label",
                               "noise_sd", "idle_gap", "scenario_id") if k in doc}
    if "metric" in doc:
        kw["metric"] = MetricKind.parse(doc["metric"])
    return SynthSpec(phases=phases, effects=effects, **kw)


def corpus_spec_from_json(doc: Mapping) -> CorpusSpec:
    kw = {}
    if "template" in doc:
        kw["template"] = synth_spec_from_json(doc["template"])
    for k in ("seed", "input_batches", "core_types", "supply_voltage"):
        if k in doc:
            kw[k] = doc[k]
    if "repetitions" in doc:
        kw["repetitions"] = tuple(doc["repetitions"])
    if "labels" in doc:
        kw["labels"] = tuple(doc["labels"])
    if "metrics" in doc:
        kw["metrics"] = tuple(MetricKind.parse(m) for m in doc["metrics"])
    return CorpusSpec(**kw)
