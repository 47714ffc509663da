"""Information-position sweeps: enumerate cases, run the pipeline, rank, report.

A case is one (knowledge level, data plan, phase selector, cut, degree,
metric, algorithm). Running a case segments every scenario of the corpus,
degrades the cut segments, fits signatures, extracts features against the
Mean Passports and cross-validates the chosen classifier.

The case seed depends on everything except the knowledge level, which only
filters the admissible selectors; the same computation reached from two
knowledge levels therefore yields identical numbers.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import (
    DEFAULT_LABELS,
    NORMAL,
    CutKind,
    InfoPosError,
    LabelSet,
    Level,
    MetricKind,
    Segment,
)
from .degrade import DegradationPlan
from .degrade import apply_plan as degrade_segment
from .features import Dataset, assemble_dataset, extract_row
from .ingest import (
    CorpusSpec,
    Scenario,
    corpus_spec_from_json,
    fmt,
    load_corpus,
    synth_corpus,
)
from .ml.models import MLConfig, model_factory
from .ml.validation import FoldStats, evaluate
from .passport import Passport, PassportKey, build_passports, fit_signature
from .segmentation import cut_selector, selector_allowed

log = logging.getLogger("infopos.sweep")

DEFAULT_SELECTORS = ("all", "cycle-op", "image-op", "neural-op", "image-op + neural-op")
DEFAULT_ALGORITHMS = ("BDT", "DT", "ET", "RF")
ENV_WORKERS = "INFOPOS_WORKERS"


class InvalidAxis(InfoPosError):
    pass


class CaseError(InfoPosError):
    pass


@dataclass(frozen=True, order=True)
class SweepCase:
    knowledge: Level
    data: str
    phase_selector: str
    cut: CutKind
    degree: int
    metric: MetricKind
    algorithm: str
    seed: int = 0
    data_level: Level = Level.RICH

    @property
    def case_id(self) -> str:
        return "|".join([self.knowledge.title, self.data, self.phase_selector, self.cut.value,
                         f"d{self.degree}", self.metric.value, self.algorithm])

    @property
    def dataset_key(self) -> tuple:
        return (self.data, self.phase_selector, self.cut, self.degree, self.metric)

    @property
    def info_position(self) -> tuple[Level, Level]:
        return (self.knowledge, self.data_level)


@dataclass(frozen=True)
class CaseResult:
    case: SweepCase
    stats: FoldStats | None
    rows: int = 0
    wall_time: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _json_or_path(doc):
    if isinstance(doc, (str, Path)):
        return json.loads(Path(doc).read_text(encoding="utf-8"))
    return doc


@dataclass(frozen=True)
class SweepConfig:
    seed: int = 0
    workers: int = 1
    threshold: float = 0.99
    labels: tuple[str, ...] = DEFAULT_LABELS
    cv_folds: int = 3
    group_by_scenario: bool = False
    outer_phase: str = "cycle-op"
    corpus: CorpusSpec | None = field(default_factory=CorpusSpec)
    catalog: Path | None = None
    knowledge: tuple[Level, ...] = (Level.RICH,)
    data: tuple[str, ...] = ("identity",)
    selectors: tuple[str, ...] = DEFAULT_SELECTORS
    cuts: tuple[CutKind, ...] = (CutKind.FULL, CutKind.INI, CutKind.MID, CutKind.END)
    degrees: tuple[int, ...] = (1, 2)
    metrics: tuple[MetricKind, ...] = (MetricKind.CURRENT,)
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    plans: Mapping[str, DegradationPlan] = field(
        default_factory=lambda: {"identity": DegradationPlan()})
    ml: MLConfig = MLConfig()

    @classmethod
    def from_json(cls, doc, base_dir: Path | None = None) -> SweepConfig:
        """Build a config from a JSON document (dict or file path).

        Keys mirror the field names; ``axes`` groups ``knowledge``, ``data``,
        ``phase_selectors``, ``cuts``, ``degrees``, ``metrics`` and
        ``algorithms``; ``data_positions`` maps plan names to degradation
        plans; ``corpus`` is either ``{"catalog": path}`` or
        ``{"synthetic": {...}}``.
        """
        if isinstance(doc, (str, Path)):
            base_dir = base_dir or Path(doc).parent
        doc = _json_or_path(doc)
        kw: dict = {}
        for k in ("seed", "workers", "threshold", "cv_folds", "group_by_scenario", "outer_phase"):
            if k in doc:
                kw[k] = doc[k]
        if "cv_mode" in doc:
            kw["group_by_scenario"] = doc["cv_mode"] == "group"
        if "labels" in doc:
            kw["labels"] = tuple(doc["labels"])
        corpus = doc.get("corpus", {"synthetic": {}})
        if "catalog" in corpus:
            p = Path(corpus["catalog"])
            kw["catalog"] = p if p.is_absolute() or base_dir is None else base_dir / p
            kw["corpus"] = None
        else:
            kw["corpus"] = corpus_spec_from_json(corpus.get("synthetic", {}))
        axes = doc.get("axes", {})
        if "knowledge" in axes:
            kw["knowledge"] = tuple(Level.parse(x) for x in axes["knowledge"])
        if "data" in axes:
            kw["data"] = tuple(axes["data"])
        if "phase_selectors" in axes:
            kw["selectors"] = tuple(axes["phase_selectors"])
        if "cuts" in axes:
            kw["cuts"] = tuple(CutKind.parse(c) for c in axes["cuts"])
        if "degrees" in axes:
            kw["degrees"] = tuple(int(d) for d in axes["degrees"])
        if "metrics" in axes:
            kw["metrics"] = tuple(MetricKind.parse(m) for m in axes["metrics"])
        if "algorithms" in axes:
            kw["algorithms"] = tuple(axes["algorithms"])
        plans = {"identity": DegradationPlan()}
        for name, p in doc.get("data_positions", {}).items():
            plans[name] = DegradationPlan.from_json({"name": name, **p})
        kw["plans"] = plans
        if "ml" in doc:
            kw["ml"] = MLConfig.from_json(doc["ml"])
        return cls(**kw)

    def load_corpus(self) -> list[Scenario]:
        if self.catalog is not None:
            return load_corpus(self.catalog)
        return synth_corpus(self.corpus)

    def plan(self, name: str) -> DegradationPlan:
        try:
            return self.plans[name]
        except KeyError:
            raise InvalidAxis(f"data axis names unknown plan {name!r}") from None


def case_seed(base: int, case: SweepCase) -> int:
    key = "|".join([case.data, case.phase_selector, case.cut.value, str(case.degree),
                    case.metric.value, case.algorithm])
    return int(np.random.SeedSequence([base, zlib.crc32(key.encode())]).generate_state(1)[0])


def enumerate_cases(config: SweepConfig) -> list[SweepCase]:
    """Cartesian product of the axes, minus selectors the knowledge level
    cannot see; order follows the axis lists."""
    axes = {
        "knowledge": config.knowledge, "data": config.data,
        "phase_selectors": config.selectors, "cuts": config.cuts,
        "degrees": config.degrees, "metrics": config.metrics,
        "algorithms": config.algorithms,
    }
    for name, values in axes.items():
        if not values:
            raise InvalidAxis(f"axis {name!r} is empty")
    for d in config.degrees:
        if d not in (1, 2):
            raise InvalidAxis(f"degree {d} not in (1, 2)")
    for a in config.algorithms:
        model_factory(a, config.ml)
    cases = []
    for kn, data, sel, cut, deg, met, alg in itertools.product(*axes.values()):
        if not selector_allowed(kn, sel, config.outer_phase):
            continue
        c = SweepCase(kn, data, sel, cut, deg, met, alg, 0, config.plan(data).position)
        cases.append(replace(c, seed=case_seed(config.seed, c)))
    return cases


# --------------------------------------------------------------------------
# pipeline


def passport_store(corpus: Sequence[Scenario], config: SweepConfig) -> dict[PassportKey, Passport]:
    """Mean Passports from the undegraded Normal scenarios for every phase
    type, cut, metric and degree the sweep can touch. Keys whose Normal
    segments cannot be cut are left out."""
    types: list[str] = []
    normal = [sc for sc in corpus if sc.label == NORMAL]
    for sc in normal:
        for iv in sc.intervals:
            if iv.phase_type not in types:
                types.append(iv.phase_type)
    store: dict[PassportKey, Passport] = {}
    for metric in config.metrics:
        for ptype in types:
            for cut in config.cuts:
                segs = []
                try:
                    for sc in normal:
                        segs.extend(cut_selector(sc.traces[metric], sc.intervals, ptype, cut))
                except InfoPosError as exc:
                    log.warning("event=passport_skipped phase=%s cut=%s metric=%s reason=%s",
                                ptype, cut.value, metric.value, type(exc).__name__)
                    continue
                if segs:
                    store.update(build_passports(segs, config.degrees))
    return store


def case_segments(corpus: Sequence[Scenario], selector: str, cut: CutKind,
                  metric: MetricKind, plan: DegradationPlan) -> list[Segment]:
    out = []
    for sc in corpus:
        if metric not in sc.traces:
            raise CaseError(f"scenario {sc.scenario_id} has no {metric.value} trace")
        for seg in cut_selector(sc.traces[metric], sc.intervals, selector, cut):
            out.append(degrade_segment(seg, plan))
    return out


def build_case_dataset(corpus: Sequence[Scenario], passports: Mapping[PassportKey, Passport],
                       plan: DegradationPlan, selector: str, cut: CutKind, degree: int,
                       metric: MetricKind) -> Dataset:
    rows = []
    for seg in case_segments(corpus, selector, cut, metric, plan):
        key = PassportKey(seg.phase_type, metric, cut, degree)
        if key not in passports:
            raise CaseError(f"no passport for {tuple(key)}")
        rows.append(extract_row(seg, fit_signature(seg, degree), passports[key]))
    return assemble_dataset(rows)


def _evaluate_dataset(case: SweepCase, ds: Dataset, config: SweepConfig) -> FoldStats:
    factory = model_factory(case.algorithm, config.ml)
    return evaluate(factory, ds, config.cv_folds, case.seed, config.group_by_scenario)


def run_case(case: SweepCase, corpus: Sequence[Scenario],
             passports: Mapping[PassportKey, Passport], config: SweepConfig) -> CaseResult:
    """Run one case end to end; failures are returned, annotated with the case id."""
    t0 = time.perf_counter()
    try:
        ds = build_case_dataset(corpus, passports, config.plan(case.data), case.phase_selector,
                                case.cut, case.degree, case.metric)
        stats = _evaluate_dataset(case, ds, config)
    except Exception as exc:  # collected, never fatal for the sweep
        return CaseResult(case, None, 0, time.perf_counter() - t0,
                          f"{case.case_id}: {type(exc).__name__}: {exc}")
    return CaseResult(case, stats, len(ds), time.perf_counter() - t0)


# worker-process state, installed once per process by the pool initializer
_STATE: dict = {}


def _init_worker(corpus, passports, config) -> None:
    _STATE.update(corpus=corpus, passports=passports, config=config)


def _run_group(cases: Sequence[SweepCase]) -> list[CaseResult]:
    """Cases sharing one dataset key: build the dataset once, evaluate each
    distinct (algorithm, seed) once."""
    corpus, passports, config = _STATE["corpus"], _STATE["passports"], _STATE["config"]
    head = cases[0]
    t0 = time.perf_counter()
    try:
        ds = build_case_dataset(corpus, passports, config.plan(head.data), head.phase_selector,
                                head.cut, head.degree, head.metric)
    except Exception as exc:
        dt = time.perf_counter() - t0
        return [CaseResult(c, None, 0, dt, f"{c.case_id}: {type(exc).__name__}: {exc}")
                for c in cases]
    build_time = time.perf_counter() - t0
    done: dict[tuple[str, int], tuple[FoldStats | None, str | None, float]] = {}
    out = []
    for c in cases:
        k = (c.algorithm, c.seed)
        if k not in done:
            t1 = time.perf_counter()
            try:
                done[k] = (_evaluate_dataset(c, ds, config), None, time.perf_counter() - t1)
            except Exception as exc:
                done[k] = (None, f"{type(exc).__name__}: {exc}", time.perf_counter() - t1)
        stats, err, dt = done[k]
        out.append(CaseResult(c, stats, len(ds) if stats else 0, build_time + dt,
                              None if err is None else f"{c.case_id}: {err}"))
    return out


def run_sweep(config: SweepConfig, corpus: Sequence[Scenario] | None = None,
              workers: int | None = None,
              progress: Callable[[CaseResult], None] | None = None) -> list[CaseResult]:
    """Run every enumerated case; results come back in enumeration order.

    Results do not depend on ``workers``: every case carries its own seed
    and the corpus and passports are read-only inputs.
    """
    if corpus is None:
        corpus = config.load_corpus()
    LabelSet(config.labels)
    for sc in corpus:
        if sc.label not in config.labels:
            raise InvalidAxis(f"scenario {sc.scenario_id} label {sc.label!r} not in label set")
    cases = enumerate_cases(config)
    passports = passport_store(corpus, config)
    groups: dict[tuple, list[SweepCase]] = {}
    for c in cases:
        groups.setdefault(c.dataset_key, []).append(c)
    n_workers = workers if workers is not None else config.workers
    n_workers = max(1, int(n_workers))
    log.info("event=sweep_start cases=%d groups=%d workers=%d", len(cases), len(groups), n_workers)

    by_id: dict[str, CaseResult] = {}

    def collect(results: list[CaseResult]) -> None:
        for r in results:
            by_id[r.case.case_id] = r
            if r.ok:
                log.info("event=case_done case=%s accuracy=%s f1=%s", r.case.case_id,
                         fmt(r.stats.mean_accuracy), fmt(r.stats.mean_f1))
            else:
                log.warning("event=case_failed case=%s error=%s", r.case.case_id,
                            json.dumps(r.error))
            if progress is not None:
                progress(r)

    if n_workers == 1:
        _init_worker(corpus, passports, config)
        try:
            for g in groups.values():
                collect(_run_group(g))
        finally:
            _STATE.clear()
    else:
        with ProcessPoolExecutor(n_workers, initializer=_init_worker,
                                 initargs=(corpus, passports, config)) as pool:
            for res in pool.map(_run_group, groups.values()):
                collect(res)
    failed = sum(not r.ok for r in by_id.values())
    log.info("event=sweep_done cases=%d failed=%d", len(by_id), failed)
    return [by_id[c.case_id] for c in cases]


def default_workers() -> int:
    return int(os.environ.get(ENV_WORKERS, "1"))


# --------------------------------------------------------------------------
# persistence

RESULT_HEADER = ["case_id", "knowledge", "data", "data_level", "phase_selector", "cut",
                 "degree", "metric", "algorithm", "seed", "status", "rows", "mean_accuracy",
                 "mean_f1", "cv_percent", "fold_accuracy", "fold_f1", "error"]


def results_to_csv(results: Iterable[CaseResult]) -> str:
    """Results sorted by case id; timing is kept out so the file is reproducible."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in sorted(results, key=lambda r: r.case.case_id):
        c = r.case
        s = r.stats
        w.writerow([
            c.case_id, c.knowledge.title, c.data, c.data_level.title, c.phase_selector,
            c.cut.value, c.degree, c.metric.value, c.algorithm, c.seed,
            "ok" if r.ok else "failed", r.rows,
            fmt(s.mean_accuracy) if s else "", fmt(s.mean_f1) if s else "",
            fmt(s.cv_percent) if s else "",
            ";".join(map(fmt, s.fold_accuracy)) if s else "",
            ";".join(map(fmt, s.fold_f1)) if s else "",
            r.error or "",
        ])
    return buf.getvalue()


def write_results(results: Iterable[CaseResult], path) -> None:
    Path(path).write_text(results_to_csv(results), encoding="utf-8", newline="\n")


def write_timings(results: Iterable[CaseResult], path) -> None:
    buf = io.StringIO()
    buf.write("case_id,wall_time\n")
    for r in sorted(results, key=lambda r: r.case.case_id):
        buf.write(f"{r.case.case_id},{r.wall_time:.6f}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_results(path) -> list[CaseResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_HEADER:
            raise ValueError(f"{path}: unexpected results header")
        for row in reader:
            case = SweepCase(Level.parse(row["knowledge"]), row["data"], row["phase_selector"],
                             CutKind.parse(row["cut"]), int(row["degree"]),
                             MetricKind.parse(row["metric"]), row["algorithm"], int(row["seed"]),
                             Level.parse(row["data_level"]))
            if row["status"] == "ok":
                stats = FoldStats(tuple(float(x) for x in row["fold_accuracy"].split(";")),
                                  tuple(float(x) for x in row["fold_f1"].split(";")))
                out.append(CaseResult(case, stats, int(row["rows"])))
            else:
                out.append(CaseResult(case, None, 0, error=row["error"]))
    return out


# --------------------------------------------------------------------------
# reporting


@dataclass(frozen=True)
class TopFlag:
    case_id: str
    knowledge_kind: str  # "poor" or "rich": poorest knowledge level that admits the selector
    mean_accuracy: float


@dataclass(frozen=True)
class RankReport:
    threshold: float
    tables: Mapping[tuple[str, CutKind], list[dict]]
    algorithms: tuple[str, ...]
    flags: tuple[TopFlag, ...]
    best_per_knowledge: Mapping[str, CaseResult]

    def flagged(self, kind: str | None = None) -> list[TopFlag]:
        return [f for f in self.flags if kind is None or f.knowledge_kind == kind]


def knowledge_kind(selector: str, outer: str = "cycle-op") -> str:
    return "poor" if selector_allowed(Level.POOR, selector, outer) else "rich"


def _selector_rank(sel: str) -> tuple:
    order = {s: i for i, s in enumerate(DEFAULT_SELECTORS)}
    return (order.get(sel, len(order)), sel)


def rank_and_report(results: Sequence[CaseResult], threshold: float = 0.99,
                    outer_phase: str = "cycle-op") -> RankReport:
    ok = [r for r in results if r.ok]
    algorithms = tuple(sorted({r.case.algorithm for r in ok}))
    cells: dict[tuple, dict] = {}
    for r in sorted(ok, key=lambda r: r.case.case_id):
        c = r.case
        row = cells.setdefault((c.data, c.cut, c.degree, c.phase_selector), {
            "phase_selector": c.phase_selector, "degree": c.degree,
            "knowledge": knowledge_kind(c.phase_selector, outer_phase), "scores": {}})
        # the same computation may appear under several knowledge levels
        row["scores"].setdefault(c.algorithm, (r.stats.mean_accuracy, r.stats.mean_f1))
    tables: dict[tuple[str, CutKind], list[dict]] = {}
    for key in sorted(cells, key=lambda k: (k[0], list(CutKind).index(k[1]), k[2],
                                            _selector_rank(k[3]))):
        tables.setdefault((key[0], key[1]), []).append(cells[key])

    flags = []
    seen = set()
    for r in sorted(ok, key=lambda r: r.case.case_id):
        c = r.case
        dedup = (c.dataset_key, c.algorithm)
        if r.stats.mean_accuracy >= threshold and dedup not in seen:
            seen.add(dedup)
            flags.append(TopFlag(c.case_id, knowledge_kind(c.phase_selector, outer_phase),
                                 r.stats.mean_accuracy))
    best: dict[str, CaseResult] = {}
    for r in sorted(ok, key=lambda r: r.case.case_id):
        k = r.case.knowledge.title
        if k not in best or r.stats.mean_accuracy > best[k].stats.mean_accuracy:
            best[k] = r
    return RankReport(threshold, tables, algorithms, tuple(flags), best)


def _signature_name(degree: int) -> str:
    return {1: "Linear reg.", 2: "Quadratic reg."}[degree]


def report_tables_csv(report: RankReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["data", "cut", "phase_selector", "signature", "knowledge"]
    for a in report.algorithms:
        header += [f"{a}_acc", f"{a}_f1", f"{a}_top"]
    w.writerow(header)
    for (data, cut), rows in report.tables.items():
        for row in rows:
            line = [data, cut.value, row["phase_selector"], _signature_name(row["degree"]),
                    row["knowledge"]]
            for a in report.algorithms:
                if a in row["scores"]:
                    acc, f1 = row["scores"][a]
                    line += [fmt(acc), fmt(f1), int(acc >= report.threshold)]
                else:
                    line += ["", "", ""]
            w.writerow(line)
    return buf.getvalue()


def report_markdown(report: RankReport) -> str:
    """Per-cut tables laid out like the reference results tables.

    ``*`` marks a top result reachable with rich knowledge only, ``+`` one
    reachable with poor (outermost-phase) knowledge.
    """
    out = [f"# Classification results (top threshold {report.threshold * 100:.2f}%)", ""]
    out.append("`*` top result, rich knowledge; `+` top result, poor knowledge. "
               "Moderate knowledge and non-Rich data positions are interpolated "
               "levels defined by the sweep configuration.")
    out.append("")
    for (data, cut), rows in report.tables.items():
        out.append(f"## {cut.value} cut, data plan `{data}`")
        out.append("")
        head = ["Phase type", "Signature"]
        for a in report.algorithms:
            head += [f"{a} acc.", f"{a} F1"]
        out.append("| " + " | ".join(head) + " |")
        out.append("|" + "|".join(["---", "---"] + ["---:"] * (2 * len(report.algorithms))) + "|")
        for row in rows:
            cells = [row["phase_selector"], _signature_name(row["degree"])]
            mark = "*" if row["knowledge"] == "rich" else "+"
            for a in report.algorithms:
                if a not in row["scores"]:
                    cells += ["", ""]
                    continue
                acc, f1 = row["scores"][a]
                tag = mark if acc >= report.threshold else ""
                cells += [f"{acc * 100:.2f}%{tag}", f"{f1:.2f}"]
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    out.append("## Best per knowledge level")
    out.append("")
    for k in sorted(report.best_per_knowledge, key=lambda k: Level.parse(k)):
        r = report.best_per_knowledge[k]
        out.append(f"- {k}: `{r.case.case_id}` accuracy {r.stats.mean_accuracy * 100:.2f}% "
                   f"(fold CV {r.stats.cv_percent:.2f}%)")
    out.append("")
    return "\n".join(out)


@dataclass(frozen=True)
class CellSummary:
    cases: int = 0
    best_accuracy: float | None = None
    failed: int = 0

    @property
    def covered(self) -> bool:
        return self.cases > 0


def matrix_coverage(results: Sequence[CaseResult], levels: Sequence[Level] = tuple(Level)
                    ) -> dict[tuple[Level, Level], CellSummary]:
    """Grid keyed by (knowledge, data) level; every case lands in one cell."""
    grid = {(k, d): CellSummary() for k in levels for d in levels}
    for r in results:
        key = r.case.info_position
        cell = grid.setdefault(key, CellSummary())
        if r.ok:
            acc = r.stats.mean_accuracy
            best = acc if cell.best_accuracy is None else max(cell.best_accuracy, acc)
            grid[key] = CellSummary(cell.cases + 1, best, cell.failed)
        else:
            grid[key] = CellSummary(cell.cases, cell.best_accuracy, cell.failed + 1)
    return grid


def coverage_text(grid: Mapping[tuple[Level, Level], CellSummary]) -> str:
    """Rows are data levels (poorest on top), columns knowledge levels."""
    ks = sorted({k for k, _ in grid})
    ds = sorted({d for _, d in grid})
    width = 22
    lines = ["data \\ knowledge".ljust(18) + "".join(k.title.ljust(width) for k in ks)]
    for d in ds:
        cells = []
        for k in ks:
            c = grid[(k, d)]
            if not c.covered:
                cells.append("uncovered".ljust(width))
            else:
                cells.append(f"n={c.cases} best={c.best_accuracy * 100:.2f}%".ljust(width))
        lines.append(d.title.ljust(18) + "".join(cells))
    return "\n".join(line.rstrip() for line in lines) + "\n"


def coverage_csv(grid: Mapping[tuple[Level, Level], CellSummary]) -> str:
    buf = io.StringIO()
    buf.write("knowledge,data,cases,failed,best_accuracy,covered\n")
    for (k, d) in sorted(grid):
        c = grid[(k, d)]
        best = "" if c.best_accuracy is None else fmt(c.best_accuracy)
        buf.write(f"{k.title},{d.title},{c.cases},{c.failed},{best},{int(c.covered)}\n")
    return buf.getvalue()


def write_report(results: Sequence[CaseResult], out_dir, threshold: float = 0.99,
                 outer_phase: str = "cycle-op") -> RankReport:
    """Write report tables and the coverage grid, derived from results only."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = rank_and_report(results, threshold, outer_phase)
    grid = matrix_coverage(results)
    files = {
        "report_tables.csv": report_tables_csv(report),
        "report.md": report_markdown(report),
        "coverage.txt": coverage_text(grid),
        "coverage.csv": coverage_csv(grid),
    }
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8", newline="\n")
    return report
