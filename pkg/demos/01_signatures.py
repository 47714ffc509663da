"""From raw traces to one feature row per phase execution.

Generates a small synthetic corpus, cuts the neural-op phase out of every
cycle, builds Mean Passports from the Normal runs and shows how the
goodness-of-fit features separate the three labels.
"""

from statistics import mean

from infopos.core import CutKind, MetricKind
from infopos.features import extract_row
from infopos.ingest import CorpusSpec, synth_corpus
from infopos.passport import PassportKey, build_passports, fit_signature
from infopos.segmentation import cut_selector

# one core type: mixing core types shifts metric levels and blurs the passport
corpus = synth_corpus(CorpusSpec(seed=7, repetitions=(1,), core_types={"core1": 1.0}))
print(f"{len(corpus)} scenarios, labels {sorted({sc.label for sc in corpus})}")

segments = []
for sc in corpus:
    segments += cut_selector(sc.traces[MetricKind.CURRENT], sc.intervals, "neural-op", CutKind.MID)
print(f"{len(segments)} neural-op Mid segments")

passports = build_passports(segments, degrees=(2,))
key = PassportKey("neural-op", MetricKind.CURRENT, CutKind.MID, 2)
sig = passports[key].signature
print(f"passport over {passports[key].support_count} Normal segments: "
      f"{sig.coefficient_2:+.4f} u^2 {sig.coefficient_1:+.4f} u {sig.intercept:+.4f}")

by_label = {}
for seg in segments:
    row = extract_row(seg, fit_signature(seg, 2), passports[key])
    by_label.setdefault(seg.label, []).append(row)

print(f"\n{'label':<10} {'own R2':>8} {'|dR2|':>8} {'own RMSE':>9} {'|dRMSE|':>9}")
for label, rows in sorted(by_label.items()):
    print(f"{label:<10} {mean(r.R2 for r in rows):8.3f} {mean(r.R2_absolute_diff for r in rows):8.3f} "
          f"{mean(r.RMSE for r in rows):9.4f} {mean(r.RMSE_absolute_diff for r in rows):9.4f}")
print("\nNormal executions fit their passport almost as well as their own curve; anomalies do not.")
