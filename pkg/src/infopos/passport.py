"""Regression signatures and Mean Passports.

A signature is a degree-1 or degree-2 least-squares polynomial of the metric
value against normalized time ``u = (t - t_start) / (t_end - t_start)``. A
Mean Passport is the coefficient-wise mean of the signatures of Normal
segments sharing one (phase type, metric, cut, degree) key.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .core import NORMAL, CutKind, InfoPosError, MetricKind, Segment
from .ingest import fmt


class TooFewSamples(InfoPosError):
    pass


class SingularFit(InfoPosError):
    pass


class DomainError(InfoPosError):
    pass


class EmptyInput(InfoPosError):
    pass


class MixedKey(InfoPosError):
    pass


class NonNormalLabel(InfoPosError):
    pass


@dataclass(frozen=True)
class RegressionSignature:
    degree: int
    coefficient_2: float
    coefficient_1: float
    intercept: float
    execution_time: float = 0.0

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {self.degree}")
        if self.degree == 1 and self.coefficient_2 != 0:
            raise ValueError("a linear signature has coefficient_2 == 0")

    @property
    def coefficients(self) -> tuple[float, float, float]:
        return (self.coefficient_2, self.coefficient_1, self.intercept)


def normalized_time(segment: Segment) -> np.ndarray:
    return (segment.t - segment.t_start) / (segment.t_end - segment.t_start)


def design_matrix(u: np.ndarray, degree: int) -> np.ndarray:
    return np.vander(u, degree + 1)


def fit_signature(segment: Segment, degree: int) -> RegressionSignature:
    """Least-squares polynomial fit via a Householder QR decomposition."""
    if degree not in (1, 2):
        raise ValueError(f"degree must be 1 or 2, got {degree}")
    n = len(segment)
    if n < degree + 1:
        raise TooFewSamples(f"{n} samples cannot determine a degree-{degree} fit")
    u = normalized_time(segment)
    if len(np.unique(u)) < degree + 1:
        raise SingularFit(f"only {len(np.unique(u))} distinct time points")
    q, r = np.linalg.qr(design_matrix(u, degree))
    coef = solve_triangular(r, q.T @ segment.values)
    if degree == 1:
        c2, c1, c0 = 0.0, coef[0], coef[1]
    else:
        c2, c1, c0 = coef
    return RegressionSignature(degree, float(c2), float(c1), float(c0), segment.duration)


def evaluate_signature(sig: RegressionSignature, u):
    """Value of the signature at normalized time ``u`` (scalar or array)."""
    arr = np.asarray(u, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
        raise DomainError("normalized time must lie in [0, 1]")
    out = (sig.coefficient_2 * arr + sig.coefficient_1) * arr + sig.intercept
    return float(out) if np.ndim(u) == 0 else out


class PassportKey(NamedTuple):
    phase_type: str
    metric: MetricKind
    cut: CutKind
    degree: int


@dataclass(frozen=True)
class Passport:
    key: PassportKey
    signature: RegressionSignature
    support_count: int


def mean_signature(sigs: Sequence[RegressionSignature]) -> RegressionSignature:
    # fsum keeps the mean independent of input order
    n = len(sigs)
    return RegressionSignature(
        sigs[0].degree,
        math.fsum(s.coefficient_2 for s in sigs) / n,
        math.fsum(s.coefficient_1 for s in sigs) / n,
        math.fsum(s.intercept for s in sigs) / n,
        math.fsum(s.execution_time for s in sigs) / n,
    )


def build_mean_passport(segments: Sequence[Segment], degree: int) -> Passport:
    if not segments:
        raise EmptyInput("no segments for passport")
    keys = {s.key for s in segments}
    if len(keys) > 1:
        raise MixedKey(f"segments span several keys: {sorted(map(str, keys))}")
    bad = [s for s in segments if s.label != NORMAL]
    if bad:
        raise NonNormalLabel(
            f"{bad[0].scenario_id} is labelled {bad[0].label}; passports use Normal runs only")
    phase_type, metric, cut = segments[0].key
    sig = mean_signature([fit_signature(s, degree) for s in segments])
    return Passport(PassportKey(phase_type, metric, cut, degree), sig, len(segments))


def build_passports(segments: Iterable[Segment], degrees: Sequence[int] = (1, 2)
                    ) -> dict[PassportKey, Passport]:
    """Group Normal segments by key and build one passport per key and degree."""
    groups: dict[tuple, list[Segment]] = {}
    for s in segments:
        if s.label == NORMAL:
            groups.setdefault(s.key, []).append(s)
    store = {}
    for key in sorted(groups, key=lambda k: (k[0], k[1].value, k[2].value)):
        for d in degrees:
            p = build_mean_passport(groups[key], d)
            store[p.key] = p
    return store


PASSPORT_HEADER = ["phase_type", "metric", "cut", "degree", "coefficient_2",
                   "coefficient_1", "intercept", "execution_time", "support_count"]


def write_passports(store: Mapping[PassportKey, Passport], path) -> None:
    buf = io.StringIO()
    buf.write(",".join(PASSPORT_HEADER) + "\n")
    for key in sorted(store, key=lambda k: (k.phase_type, k.metric.value, k.cut.value, k.degree)):
        p = store[key]
        s = p.signature
        buf.write(",".join([key.phase_type, key.metric.value, key.cut.value, str(key.degree),
                            fmt(s.coefficient_2), fmt(s.coefficient_1), fmt(s.intercept),
                            fmt(s.execution_time), str(p.support_count)]) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_passports(path) -> dict[PassportKey, Passport]:
    store = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PASSPORT_HEADER:
            raise ValueError(f"{path}: unexpected passport header {reader.fieldnames}")
        for row in reader:
            key = PassportKey(row["phase_type"], MetricKind.parse(row["metric"]),
                              CutKind.parse(row["cut"]), int(row["degree"]))
            sig = RegressionSignature(key.degree, float(row["coefficient_2"]),
                                      float(row["coefficient_1"]), float(row["intercept"]),
                                      float(row["execution_time"]))
            store[key] = Passport(key, sig, int(row["support_count"]))
    return store
