"""Goodness-of-fit features against Mean Passports and the labelled dataset."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .core import CutKind, InfoPosError, MetricKind, Segment
from .ingest import fmt
from .passport import (
    Passport,
    PassportKey,
    RegressionSignature,
    TooFewSamples,
    evaluate_signature,
    normalized_time,
)

FEATURE_COLUMNS = (
    "execution_time", "coefficient_2", "coefficient_1", "intercept",
    "R2", "R2_absolute_diff", "RMSE", "RMSE_absolute_diff",
)
DATASET_HEADER = (*FEATURE_COLUMNS, "label")
PROVENANCE_HEADER = ("scenario_id", "phase_type", "cut", "metric", "degree", "instance")
SCHEMA_VERSION = 1
R2_FLOOR = -1e6


class KeyMismatch(InfoPosError):
    pass


class SchemaMismatch(InfoPosError):
    pass


class EmptyDataset(InfoPosError):
    pass


class GoodnessOfFit(NamedTuple):
    r2: float
    rmse: float


def gof(segment: Segment, curve: RegressionSignature, floor: float = R2_FLOOR) -> GoodnessOfFit:
    """R2 and RMSE of the segment's samples against ``curve``.

    A flat segment (zero total sum of squares) scores R2 = 1 when the curve
    reproduces it up to rounding and ``floor`` otherwise.
    """
    if len(segment) < 2:
        raise TooFewSamples(f"{len(segment)} samples")
    y = segment.values
    resid = y - evaluate_signature(curve, normalized_time(segment))
    ss_res = float(resid @ resid)
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    rmse = float(np.sqrt(ss_res / len(y)))
    if ss_tot == 0:
        # a fitted constant may carry rounding error of a few ulps
        tol = len(y) * (64 * np.finfo(float).eps * max(1.0, float(np.abs(y).max()))) ** 2
        r2 = 1.0 if ss_res <= tol else floor
    else:
        r2 = 1.0 - ss_res / ss_tot
    return GoodnessOfFit(r2, rmse)


class Provenance(NamedTuple):
    scenario_id: str
    phase_type: str
    cut: CutKind
    metric: MetricKind
    degree: int
    instance: int = 0


@dataclass(frozen=True)
class FeatureRow:
    execution_time: float
    coefficient_2: float
    coefficient_1: float
    intercept: float
    R2: float
    R2_absolute_diff: float
    RMSE: float
    RMSE_absolute_diff: float
    label: str
    provenance: Provenance | None = None

    @property
    def features(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in FEATURE_COLUMNS)


def extract_row(segment: Segment, own_fit: RegressionSignature, passport: Passport) -> FeatureRow:
    want = PassportKey(segment.phase_type, segment.metric, segment.cut, own_fit.degree)
    if passport.key != want:
        raise KeyMismatch(f"passport {tuple(passport.key)} does not match segment {tuple(want)}")
    r2, rmse = gof(segment, own_fit)
    r2_pass, rmse_pass = gof(segment, passport.signature)
    return FeatureRow(
        own_fit.execution_time, own_fit.coefficient_2, own_fit.coefficient_1, own_fit.intercept,
        r2, abs(r2 - r2_pass), rmse, abs(rmse - rmse_pass), segment.label,
        Provenance(segment.scenario_id, segment.phase_type, segment.cut, segment.metric,
                   own_fit.degree, segment.instance_id),
    )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix in fixed column order plus labels and optional provenance."""

    X: np.ndarray
    labels: tuple[str, ...]
    provenance: tuple[Provenance, ...] | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        X = np.array(self.X, dtype=float).reshape(-1, len(FEATURE_COLUMNS))
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(X):
            raise SchemaMismatch(f"{len(X)} rows but {len(self.labels)} labels")
        if self.provenance is not None:
            object.__setattr__(self, "provenance", tuple(self.provenance))
            if len(self.provenance) != len(X):
                raise SchemaMismatch("provenance length differs from row count")
        if not np.all(np.isfinite(X)):
            raise SchemaMismatch("non-finite feature values")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    @property
    def class_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(self.labels).items()))

    @property
    def groups(self) -> tuple[str, ...] | None:
        if self.provenance is None:
            return None
        return tuple(p.scenario_id for p in self.provenance)

    def subset(self, idx) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        prov = None if self.provenance is None else tuple(self.provenance[i] for i in idx)
        return Dataset(self.X[idx], tuple(self.labels[i] for i in idx), prov, self.schema_version)

    def rows(self) -> list[FeatureRow]:
        prov = self.provenance or (None,) * len(self)
        return [FeatureRow(*map(float, x), label=lab, provenance=p)
                for x, lab, p in zip(self.X, self.labels, prov)]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self.X, other.X) and self.labels == other.labels
                and self.provenance == other.provenance)


def _check_policy(provs: Sequence[Provenance]) -> None:
    policies = {(p.metric, p.degree, p.cut) for p in provs}
    if len(policies) > 1:
        raise SchemaMismatch(f"rows mix (metric, degree, cut) policies: {sorted(map(str, policies))}")


def assemble_dataset(rows: Iterable[FeatureRow]) -> Dataset:
    rows = list(rows)
    if not rows:
        raise EmptyDataset("no rows")
    provs = [r.provenance for r in rows]
    if all(p is not None for p in provs):
        _check_policy(provs)
        prov = tuple(provs)
    elif any(p is not None for p in provs):
        raise SchemaMismatch("some rows carry provenance and some do not")
    else:
        prov = None
    X = np.array([r.features for r in rows], dtype=float)
    return Dataset(X, tuple(r.label for r in rows), prov)


def concat_datasets(datasets: Sequence[Dataset]) -> Dataset:
    if not datasets:
        raise EmptyDataset("nothing to concatenate")
    if len({d.schema_version for d in datasets}) > 1:
        raise SchemaMismatch("schema versions differ")
    provs = [d.provenance for d in datasets]
    if all(p is not None for p in provs):
        prov = tuple(p for ps in provs for p in ps)
    else:
        prov = None
    return Dataset(np.vstack([d.X for d in datasets]),
                   tuple(lab for d in datasets for lab in d.labels), prov)


def provenance_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".provenance.csv")


def write_dataset(ds: Dataset, path) -> None:
    """Write the 9-column dataset CSV; provenance goes to a sidecar file."""
    if len(ds) == 0:
        raise EmptyDataset("refusing to write an empty dataset")
    buf = io.StringIO()
    buf.write(",".join(DATASET_HEADER) + "\n")
    for x, lab in zip(ds.X.tolist(), ds.labels):
        buf.write(",".join(fmt(v) for v in x) + f",{lab}\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    if ds.provenance is not None:
        buf = io.StringIO()
        buf.write(",".join(PROVENANCE_HEADER) + "\n")
        for p in ds.provenance:
            buf.write(f"{p.scenario_id},{p.phase_type},{p.cut.value},{p.metric.value},"
                      f"{p.degree},{p.instance}\n")
        provenance_path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def read_dataset(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != DATASET_HEADER:
            raise SchemaMismatch(f"{path}: header {header} != {list(DATASET_HEADER)}")
        X, labels = [], []
        for row in reader:
            if not row:
                continue
            X.append([float(v) for v in row[:-1]])
            labels.append(row[-1])
    if not labels:
        raise EmptyDataset(f"{path}: no rows")
    prov = None
    side = provenance_path(path)
    if side.exists():
        with open(side, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if tuple(next(reader)) != PROVENANCE_HEADER:
                raise SchemaMismatch(f"{side}: bad provenance header")
            prov = tuple(Provenance(r[0], r[1], CutKind.parse(r[2]), MetricKind.parse(r[3]),
                                    int(r[4]), int(r[5])) for r in reader if r)
    return Dataset(np.array(X), tuple(labels), prov)
