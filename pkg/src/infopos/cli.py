"""``infopos`` command line: one subcommand per workflow stage.

Exit status is 0 on success, 1 when validation or any sweep case fails and
2 on usage errors. Log lines go to stderr as ``key=value`` pairs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import degrade as degrade_mod
from .core import (
    CutKind,
    InfoPosError,
    Level,
    MetricKind,
    pair_phase_events,
    phase_types_in_order,
    validate_trace,
)
from .features import assemble_dataset, extract_row, read_dataset, write_dataset
from .ingest import (
    CorpusSpec,
    corpus_spec_from_json,
    load_corpus,
    read_phase_events_csv,
    read_trace_csv,
    synth_corpus,
    write_corpus,
)
from .ml.models import MLConfig, model_factory, save_model
from .ml.validation import evaluate
from .passport import PassportKey, build_passports, fit_signature, read_passports, write_passports
from .segmentation import (
    ALL_CUTS,
    cut_selector,
    read_segments_csv,
    selector_allowed,
    write_segments_csv,
)
from .sweep import (
    ENV_WORKERS,
    SweepConfig,
    read_results,
    run_sweep,
    write_report,
    write_results,
    write_timings,
)

log = logging.getLogger("infopos.cli")


def _read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_validate(args) -> int:
    trace = read_trace_csv(args.trace, args.metric or "Current")
    report = validate_trace(trace)
    for f in report.findings:
        print(f"finding={json.dumps(f)}")
    if args.events:
        pair_phase_events(read_phase_events_csv(args.events))
    print(f"valid={int(report.valid)} samples={len(trace)}")
    return 0 if report.valid else 1


def cmd_synth(args) -> int:
    spec = corpus_spec_from_json(_read_json(args.spec)) if args.spec else CorpusSpec()
    if args.seed is not None:
        spec = CorpusSpec(**{**spec.__dict__, "seed": args.seed})
    cat = write_corpus(synth_corpus(spec), _out(args))
    log.info("event=synth_done catalog=%s", cat)
    return 0


def cmd_segment(args) -> int:
    corpus = load_corpus(args.catalog)
    metric = MetricKind.parse(args.metric or "Current")
    cuts = [CutKind.parse(c) for c in args.cut] if args.cut else list(ALL_CUTS)
    knowledge = Level.parse(args.knowledge)
    segs = []
    for sc in corpus:
        types = phase_types_in_order(sc.intervals)
        phases = args.phase or types
        for p in phases:
            if not selector_allowed(knowledge, p, types[0]):
                raise InfoPosError(f"phase {p!r} needs more than {knowledge.title} knowledge")
            for cut in cuts:
                segs.extend(cut_selector(sc.traces[metric], sc.intervals, p, cut))
    path = _out(args) / f"segments_{metric.value.lower()}.csv"
    write_segments_csv(segs, path)
    log.info("event=segment_done segments=%d path=%s", len(segs), path)
    return 0


def cmd_passport(args) -> int:
    segs = read_segments_csv(args.segments)
    degrees = args.degree or [1, 2]
    store = build_passports(segs, degrees)
    path = _out(args) / "passports.csv"
    write_passports(store, path)
    log.info("event=passport_done passports=%d path=%s", len(store), path)
    return 0


def cmd_degrade(args) -> int:
    plan = degrade_mod.DegradationPlan.from_json(_read_json(args.config))
    if args.seed is not None:
        plan = degrade_mod.DegradationPlan(plan.operators, args.seed, plan.position, plan.name)
    segs = [degrade_mod.apply_plan(s, plan) for s in read_segments_csv(args.segments)]
    path = _out(args) / "segments_degraded.csv"
    write_segments_csv(segs, path)
    log.info("event=degrade_done segments=%d plan=%s path=%s", len(segs), plan.name, path)
    return 0


def cmd_dataset(args) -> int:
    segs = read_segments_csv(args.segments)
    store = read_passports(args.passports)
    degrees = args.degree or [1]
    cuts = [CutKind.parse(c) for c in args.cut] if args.cut else None
    out = _out(args)
    groups: dict[tuple, list] = {}
    for s in segs:
        if args.phase and s.phase_type not in args.phase:
            continue
        if cuts and s.cut not in cuts:
            continue
        groups.setdefault((s.metric, s.cut), []).append(s)
    for (metric, cut), members in sorted(groups.items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)):
        for d in degrees:
            rows = []
            for s in members:
                key = PassportKey(s.phase_type, metric, cut, d)
                if key not in store:
                    raise InfoPosError(f"no passport for {tuple(key)}")
                rows.append(extract_row(s, fit_signature(s, d), store[key]))
            path = out / f"dataset_{metric.value.lower()}_{cut.value.lower()}_d{d}.csv"
            write_dataset(assemble_dataset(rows), path)
            log.info("event=dataset_done rows=%d path=%s", len(rows), path)
    return 0


def _ml_config(args) -> MLConfig:
    return MLConfig.from_json(_read_json(args.config)) if args.config else MLConfig()


def cmd_train(args) -> int:
    ds = read_dataset(args.dataset)
    model = model_factory(args.algorithm, _ml_config(args))(ds, args.seed or 0)
    path = _out(args) / f"model_{args.algorithm.lower()}.json"
    save_model(model, path)
    log.info("event=train_done algorithm=%s rows=%d path=%s", args.algorithm, len(ds), path)
    return 0


def cmd_eval(args) -> int:
    ds = read_dataset(args.dataset)
    stats = evaluate(model_factory(args.algorithm, _ml_config(args)), ds, args.folds,
                     args.seed or 0, args.group_by_scenario)
    doc = {
        "algorithm": args.algorithm, "rows": len(ds), "folds": stats.k,
        "fold_accuracy": list(stats.fold_accuracy), "fold_f1": list(stats.fold_f1),
        "mean_accuracy": stats.mean_accuracy, "mean_f1": stats.mean_f1,
        "cv_percent": stats.cv_percent,
    }
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        (_out(args) / f"eval_{args.algorithm.lower()}.json").write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = SweepConfig.from_json(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if overrides:
        cfg = SweepConfig(**{**cfg.__dict__, **overrides})
    workers = args.workers
    if workers is None:
        workers = int(os.environ[ENV_WORKERS]) if ENV_WORKERS in os.environ else cfg.workers
    results = run_sweep(cfg, workers=workers)
    out = _out(args)
    write_results(results, out / "results.csv")
    write_timings(results, out / "timings.csv")
    write_report(results, out, cfg.threshold, cfg.outer_phase)
    failed = [r for r in results if not r.ok]
    for r in failed:
        print(f"failed={json.dumps(r.error)}", file=sys.stderr)
    return 1 if failed else 0


def cmd_report(args) -> int:
    results = read_results(args.results)
    threshold = 0.99 if args.threshold is None else args.threshold
    write_report(results, _out(args), threshold)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infopos", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a trace CSV (and optionally its event log)")
    s.add_argument("--trace", required=True)
    s.add_argument("--events")
    s.add_argument("--metric")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("synth", help="generate a synthetic corpus with catalog")
    s.add_argument("--spec", help="corpus spec JSON; defaults to the built-in grid")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("segment", help="cut catalog traces into per-phase segments")
    s.add_argument("--catalog", required=True)
    s.add_argument("--metric")
    s.add_argument("--phase", action="append", help="phase selector (repeatable)")
    s.add_argument("--cut", action="append", help="Full|Ini|Mid|End (repeatable)")
    s.add_argument("--knowledge", default="Rich")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("passport", help="Mean Passports from Normal segments")
    s.add_argument("--segments", required=True)
    s.add_argument("--degree", type=int, action="append", choices=(1, 2))
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_passport)

    s = sub.add_parser("degrade", help="apply a degradation plan to segments")
    s.add_argument("--segments", required=True)
    s.add_argument("--config", required=True, help="degradation plan JSON")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("dataset", help="feature datasets from segments and passports")
    s.add_argument("--segments", required=True)
    s.add_argument("--passports", required=True)
    s.add_argument("--degree", type=int, action="append", choices=(1, 2))
    s.add_argument("--cut", action="append")
    s.add_argument("--phase", action="append")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_dataset)

    for name, func, helptext in (("train", cmd_train, "fit one classifier on a dataset"),
                                 ("eval", cmd_eval, "k-fold cross-validate a classifier")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--dataset", required=True)
        s.add_argument("--algorithm", required=True)
        s.add_argument("--config", help="ML hyperparameter JSON")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", required=(name == "train"))
        if name == "eval":
            s.add_argument("--folds", type=int, default=3)
            s.add_argument("--group-by-scenario", action="store_true")
        s.set_defaults(func=func)

    s = sub.add_parser("sweep", help="run an information-position sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--threshold", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="regenerate reports from a results CSV")
    s.add_argument("--results", required=True)
    s.add_argument("--threshold", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
        format="level=%(levelname)s logger=%(name)s %(message)s", force=True)
    try:
        return args.func(args)
    except (InfoPosError, ValueError, KeyError, OSError, NotImplementedError) as exc:
        print(f"error={json.dumps(f'{type(exc).__name__}: {exc}')}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
