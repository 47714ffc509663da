import json
from dataclasses import replace
from pathlib import Path

import pytest

from infopos.core import CutKind, Level, MetricKind
from infopos.degrade import DegradationPlan, OperatorSpec
from infopos.ingest import CorpusSpec, SynthSpec, synth_corpus
from infopos.ml import FoldStats, MLConfig
from infopos.sweep import (
    CaseResult,
    InvalidAxis,
    SweepCase,
    SweepConfig,
    coverage_text,
    enumerate_cases,
    matrix_coverage,
    passport_store,
    rank_and_report,
    read_results,
    results_to_csv,
    run_case,
    run_sweep,
    write_report,
    write_results,
)

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMALL_SPEC = CorpusSpec(seed=3, template=SynthSpec(cycles=4), repetitions=(1,),
                        core_types={"core1": 1.0})
FAST = MLConfig(n_trees=10, n_rounds=10)


def small_config(**kw):
    base = SweepConfig(seed=1, corpus=SMALL_SPEC, selectors=("cycle-op", "neural-op"),
                       cuts=(CutKind.FULL, CutKind.MID), degrees=(1,),
                       algorithms=("DT", "RF"), ml=FAST)
    return replace(base, **kw)


def fake_result(acc, selector="neural-op", cut=CutKind.FULL, alg="DT", knowledge=Level.RICH,
                data="identity", level=Level.RICH, degree=1):
    case = SweepCase(knowledge, data, selector, cut, degree, MetricKind.CURRENT, alg, 0, level)
    return CaseResult(case, FoldStats((acc,) * 3, (acc,) * 3), 30)


def test_full_grid_enumerates_160():
    cfg = SweepConfig.from_json(CONFIGS / "full_grid.json")
    assert len(enumerate_cases(cfg)) == 5 * 4 * 2 * 4 == 160


def test_poor_knowledge_enumerates_32():
    cfg = SweepConfig(knowledge=(Level.POOR,))
    cases = enumerate_cases(cfg)
    assert len(cases) == 32
    assert {c.phase_selector for c in cases} == {"cycle-op"}


def test_moderate_knowledge_single_phases():
    cases = enumerate_cases(SweepConfig(knowledge=(Level.MODERATE,)))
    assert {c.phase_selector for c in cases} == {"cycle-op", "image-op", "neural-op"}


def test_empty_axis():
    with pytest.raises(InvalidAxis):
        enumerate_cases(SweepConfig(cuts=()))
    with pytest.raises(InvalidAxis):
        enumerate_cases(SweepConfig(data=("nonexistent",)))


def test_case_ids_unique_and_seeds_stable():
    cases = enumerate_cases(SweepConfig(knowledge=tuple(Level)))
    assert len({c.case_id for c in cases}) == len(cases)
    again = enumerate_cases(SweepConfig(knowledge=tuple(Level)))
    assert [c.seed for c in cases] == [c.seed for c in again]


def test_all_configs_parse():
    for p in sorted(CONFIGS.glob("*.json")):
        doc = json.loads(p.read_text())
        if "axes" in doc:
            assert enumerate_cases(SweepConfig.from_json(p))


@pytest.fixture(scope="module")
def default_setup():
    cfg = SweepConfig(seed=2)
    corpus = synth_corpus(cfg.corpus)
    return cfg, corpus, passport_store(corpus, cfg)


def test_run_case_full_cut_separable(default_setup):
    cfg, corpus, store = default_setup
    case = next(c for c in enumerate_cases(cfg)
                if c.phase_selector == "neural-op" and c.cut is CutKind.FULL
                and c.algorithm == "DT" and c.degree == 1)
    r = run_case(case, corpus, store, cfg)
    assert r.ok and r.stats.mean_accuracy >= 0.95
    again = run_case(case, corpus, store, cfg)
    assert again.stats == r.stats and again.rows == r.rows


def test_run_case_missing_passport(default_setup):
    cfg, corpus, _ = default_setup
    case = enumerate_cases(cfg)[0]
    r = run_case(case, corpus, {}, cfg)
    assert not r.ok
    assert r.error.startswith(case.case_id) and "passport" in r.error


def test_workers_do_not_change_results():
    cfg = small_config()
    one = results_to_csv(run_sweep(cfg, workers=1))
    many = results_to_csv(run_sweep(cfg, workers=8))
    assert one == many


def test_poisoned_case_is_collected():
    poison = DegradationPlan((OperatorSpec("decimate", {"keep_every": 10_000}),),
                             position=Level.POOR, name="poison")
    cfg = small_config(data=("identity", "poison"),
                       plans={"identity": DegradationPlan(), "poison": poison})
    seen = []
    results = run_sweep(cfg, progress=seen.append)
    assert len(seen) == len(results) == len(enumerate_cases(cfg))
    bad = [r for r in results if not r.ok]
    good = [r for r in results if r.ok]
    assert bad and good
    assert all(r.case.data == "poison" and "EmptySegment" in r.error for r in bad)
    assert all(r.case.data == "identity" for r in good)


def test_results_round_trip_and_report_regeneration(tmp_path):
    results = run_sweep(small_config())
    write_results(results, tmp_path / "results.csv")
    back = read_results(tmp_path / "results.csv")
    assert results_to_csv(back) == results_to_csv(results)
    write_report(results, tmp_path / "a")
    write_report(back, tmp_path / "b")
    for name in ("report.md", "report_tables.csv", "coverage.txt", "coverage.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_no_flags_below_threshold():
    rep = rank_and_report([fake_result(0.9), fake_result(0.95, alg="RF")], 0.99)
    assert rep.flags == ()


def test_single_flag():
    rep = rank_and_report([fake_result(0.995), fake_result(0.9, alg="RF"),
                           fake_result(0.97, selector="cycle-op")], 0.99)
    assert len(rep.flags) == 1
    assert rep.flags[0].knowledge_kind == "rich"
    assert rank_and_report([fake_result(0.995, selector="cycle-op")], 0.99).flagged("poor")


def test_rich_data_only_fills_bottom_row():
    grid = matrix_coverage([fake_result(0.9), fake_result(0.8, knowledge=Level.POOR,
                                                          selector="cycle-op")])
    covered = {k for k, c in grid.items() if c.covered}
    assert covered == {(Level.RICH, Level.RICH), (Level.POOR, Level.RICH)}
    lines = coverage_text(grid).splitlines()
    assert lines[-1].startswith("Rich") and "n=1" in lines[-1]
    assert "n=" not in lines[1] and "n=" not in lines[2]


def test_empty_results_uncovered():
    grid = matrix_coverage([])
    assert len(grid) == 9 and not any(c.covered for c in grid.values())


def test_two_ladders_two_rows():
    results = [fake_result(0.9, data="identity"),
               fake_result(0.7, data="jit", level=Level.MODERATE),
               fake_result(0.5, data="mask", level=Level.POOR)]
    grid = matrix_coverage(results)
    rows = {d for (k, d), c in grid.items() if c.covered and d is not Level.RICH}
    assert rows == {Level.MODERATE, Level.POOR}
    assert sum(c.cases + c.failed for c in grid.values()) == len(results)


def test_config_from_json_fields(tmp_path):
    doc = {"seed": 9, "cv_mode": "group", "threshold": 0.95,
           "corpus": {"synthetic": {"seed": 4, "repetitions": [1]}},
           "axes": {"knowledge": ["Poor", "Rich"], "data": ["identity", "j"],
                    "cuts": ["Mid"], "degrees": [2], "metrics": ["Power"], "algorithms": ["DT"]},
           "data_positions": {"j": {"position": "Moderate", "seed": 1,
                                    "operators": [{"op": "jitter", "sigma_rel": 0.05}]}},
           "ml": {"n_trees": 5}}
    (tmp_path / "c.json").write_text(json.dumps(doc))
    cfg = SweepConfig.from_json(tmp_path / "c.json")
    assert cfg.group_by_scenario and cfg.seed == 9 and cfg.ml.n_trees == 5
    assert cfg.plan("j").position is Level.MODERATE
    assert cfg.metrics == (MetricKind.POWER,) and cfg.corpus.repetitions == (1,)
    cases = enumerate_cases(cfg)
    assert {c.info_position for c in cases} == {
        (Level.POOR, Level.RICH), (Level.POOR, Level.MODERATE),
        (Level.RICH, Level.RICH), (Level.RICH, Level.MODERATE)}


def test_catalog_corpus(tmp_path):
    from infopos.ingest import write_corpus
    cat = write_corpus(synth_corpus(SMALL_SPEC), tmp_path / "corpus")
    doc = {"corpus": {"catalog": "corpus/catalog.json"},
           "axes": {"phase_selectors": ["neural-op"], "cuts": ["Full"], "degrees": [1],
                    "algorithms": ["DT"]}}
    (tmp_path / "c.json").write_text(json.dumps(doc))
    cfg = SweepConfig.from_json(tmp_path / "c.json")
    assert cfg.catalog == cat
    results = run_sweep(cfg)
    assert len(results) == 1 and results[0].ok
