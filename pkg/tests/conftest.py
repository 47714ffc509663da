import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from infopos.core import CutKind, MetricKind, Segment  # noqa: E402
from infopos.features import FEATURE_COLUMNS, Dataset  # noqa: E402
from infopos.ingest import CorpusSpec, SynthSpec, synth_corpus  # noqa: E402

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def make_segment(t, values, t_start=None, t_end=None, label="Normal", phase="neural-op",
                 cut=CutKind.FULL, scenario="s0", instance=0, metric=MetricKind.CURRENT):
    t = np.asarray(t, dtype=float)
    if t_start is None:
        t_start = float(t[0])
    if t_end is None:
        t_end = float(t[-1]) + (float(t[1] - t[0]) if len(t) > 1 else 1.0)
    return Segment(scenario, metric, phase, cut, label, t, np.asarray(values, dtype=float),
                   t_start, t_end, instance)


def blob_dataset(n_per_class=50, seed=0, **kw) -> Dataset:
    from oracles import blobs
    X, labels, _ = blobs(n_per_class, len(FEATURE_COLUMNS), seed=seed, **kw)
    return Dataset(X, tuple(labels))


@pytest.fixture(scope="session")
def small_corpus():
    spec = CorpusSpec(seed=3, template=SynthSpec(cycles=4), repetitions=(1,),
                      core_types={"core1": 1.0}, input_batches={"batch1": 1.0, "batch2": 1.15})
    return synth_corpus(spec)


@pytest.fixture(scope="session")
def default_corpus():
    return synth_corpus(CorpusSpec(seed=7))


# one verdict line per acceptance criterion, echoed in the terminal summary
VERDICTS: list[str] = []


def record_verdict(number, name, ok, detail=""):
    status = ok if isinstance(ok, str) else ("PASS" if ok else "FAIL")
    line = f"criterion {number} {status}: {name}" + (f" ({detail})" if detail else "")
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.write_sep("=", "acceptance")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
