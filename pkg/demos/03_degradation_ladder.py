"""How quickly does accuracy fall as measurement noise grows?

Applies jitter of increasing strength to every segment before feature
extraction and reports mean 3-fold accuracy per phase selector.
"""

from statistics import mean

from infopos.core import CutKind, Level
from infopos.degrade import DegradationPlan, OperatorSpec
from infopos.ingest import CorpusSpec, synth_corpus
from infopos.ml import MLConfig
from infopos.sweep import SweepConfig, run_sweep

corpus = synth_corpus(CorpusSpec(seed=7))
ladder = (0.0, 0.1, 0.2, 0.4, 0.8)
selectors = ("cycle-op", "image-op", "neural-op")

print(f"{'sigma_rel':>9} " + " ".join(f"{s:>10}" for s in selectors))
for sigma in ladder:
    plan = DegradationPlan((OperatorSpec("jitter", {"sigma_rel": sigma}),), seed=1,
                           position=Level.MODERATE, name="jitter")
    cfg = SweepConfig(seed=3, selectors=selectors, cuts=(CutKind.FULL,), degrees=(1,),
                      algorithms=("RF",), data=("jitter",), plans={"jitter": plan},
                      ml=MLConfig(n_trees=30))
    results = run_sweep(cfg, corpus=corpus)
    row = [mean(r.stats.mean_accuracy for r in results if r.case.phase_selector == s)
           for s in selectors]
    print(f"{sigma:9.2f} " + " ".join(f"{a:10.3f}" for a in row))
