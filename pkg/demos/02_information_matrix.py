"""Where on the knowledge x data matrix does classification still work?

Runs the three-by-three grid from configs/matrix.json (poorer data is
simulated by degradation plans) and prints the coverage matrix plus the
best configuration per knowledge position.
"""

from pathlib import Path

from infopos.sweep import (
    SweepConfig,
    coverage_text,
    matrix_coverage,
    rank_and_report,
    report_markdown,
    run_sweep,
)

cfg = SweepConfig.from_json(Path(__file__).resolve().parents[1] / "configs" / "matrix.json")
results = run_sweep(cfg, progress=lambda r: print(".", end="", flush=True))
print(f"\n{len(results)} cases, {sum(not r.ok for r in results)} failed\n")

print(coverage_text(matrix_coverage(results)))
print(report_markdown(rank_and_report(results, cfg.threshold, cfg.outer_phase)))
