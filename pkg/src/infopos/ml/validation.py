"""Stratified k-fold cross-validation, accuracy and macro-F1."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import InfoPosError
from ..features import Dataset
from ..ingest import make_rng
from .models import ModelFactory, predict


class ClassTooSmall(InfoPosError):
    pass


def _labels_of(data) -> tuple[str, ...]:
    return data.labels if isinstance(data, Dataset) else tuple(data)


def stratified_kfold(data, k: int, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffle each class, then deal its rows round-robin over the folds.

    Each class starts dealing where the previous one stopped, so fold sizes
    also differ by at most one.
    """
    labels = _labels_of(data)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = make_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    offset = 0
    for cls in sorted(set(labels)):
        rows = np.array([i for i, lab in enumerate(labels) if lab == cls])
        if len(rows) < k:
            raise ClassTooSmall(f"class {cls!r} has {len(rows)} rows, fewer than k={k}")
        rows = rows[rng.permutation(len(rows))]
        fold_of[rows] = (offset + np.arange(len(rows))) % k
        offset = (offset + len(rows)) % k
    return _folds_from_assignment(fold_of, k)


def group_kfold(data, groups: Sequence[str], k: int, seed: int = 0
                ) -> list[tuple[np.ndarray, np.ndarray]]:
    """Keep every group (scenario) inside one fold; groups are stratified by
    their majority label."""
    labels = _labels_of(data)
    if len(groups) != len(labels):
        raise ValueError("one group per row required")
    members: dict[str, list[int]] = {}
    for i, g in enumerate(groups):
        members.setdefault(g, []).append(i)
    group_label = {}
    for g, rows in members.items():
        counts: dict[str, int] = {}
        for i in rows:
            counts[labels[i]] = counts.get(labels[i], 0) + 1
        group_label[g] = min(counts, key=lambda c: (-counts[c], c))
    rng = make_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    offset = 0
    for cls in sorted(set(group_label.values())):
        gs = sorted(g for g, c in group_label.items() if c == cls)
        if len(gs) < k:
            raise ClassTooSmall(f"class {cls!r} has {len(gs)} groups, fewer than k={k}")
        gs = [gs[i] for i in rng.permutation(len(gs))]
        for j, g in enumerate(gs):
            fold_of[members[g]] = (offset + j) % k
        offset = (offset + len(gs)) % k
    return _folds_from_assignment(fold_of, k)


def _folds_from_assignment(fold_of: np.ndarray, k: int):
    idx = np.arange(len(fold_of))
    return [(idx[fold_of != f], idx[fold_of == f]) for f in range(k)]


def accuracy(y_true: Sequence[str], y_pred: Sequence[str]) -> float:
    if not y_true:
        raise ValueError("empty fold")
    return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)


def confusion_matrix(y_true, y_pred, classes: Sequence[str]) -> np.ndarray:
    pos = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=int)
    for a, b in zip(y_true, y_pred):
        cm[pos[a], pos[b]] += 1
    return cm


def f1_from_confusion(cm: np.ndarray) -> np.ndarray:
    """Per-class F1 (rows = true class); 0 when precision + recall is 0."""
    tp = np.diag(cm).astype(float)
    pred = cm.sum(axis=0)
    true = cm.sum(axis=1)
    precision = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    recall = np.divide(tp, true, out=np.zeros_like(tp), where=true > 0)
    denom = precision + recall
    return np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(y_true, y_pred, classes: Sequence[str] | None = None) -> float:
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred))
    return float(f1_from_confusion(confusion_matrix(y_true, y_pred, classes)).mean())


def coefficient_of_variation(values: Sequence[float]) -> float:
    """Population sd over mean, in percent."""
    mu = statistics.fmean(values)
    sd = statistics.pstdev(values)
    if mu == 0:
        return 0.0 if sd == 0 else float("inf")
    return sd / mu * 100.0


@dataclass(frozen=True)
class FoldStats:
    fold_accuracy: tuple[float, ...]
    fold_f1: tuple[float, ...]

    @property
    def k(self) -> int:
        return len(self.fold_accuracy)

    @property
    def mean_accuracy(self) -> float:
        return statistics.fmean(self.fold_accuracy)

    @property
    def mean_f1(self) -> float:
        return statistics.fmean(self.fold_f1)

    @property
    def cv_percent(self) -> float:
        return coefficient_of_variation(self.fold_accuracy)


def evaluate(model_factory: ModelFactory, dataset: Dataset, k: int = 3, seed: int = 0,
             group_by_scenario: bool = False) -> FoldStats:
    """k-fold CV; fold ``f`` trains with seed derived from (seed, f)."""
    if group_by_scenario:
        if dataset.groups is None:
            raise ValueError("group mode needs provenance (scenario ids)")
        folds = group_kfold(dataset, dataset.groups, k, seed)
    else:
        folds = stratified_kfold(dataset, k, seed)
    classes = dataset.classes
    accs, f1s = [], []
    for f, (train, test) in enumerate(folds):
        assert not np.intersect1d(train, test).size, "train/test overlap"
        fold_seed = int(np.random.SeedSequence([seed, f]).generate_state(1)[0])
        model = model_factory(dataset.subset(train), fold_seed)
        truth = [dataset.labels[i] for i in test]
        pred = predict(model, dataset.X[test])
        accs.append(accuracy(truth, pred))
        f1s.append(macro_f1(truth, pred, classes))
    return FoldStats(tuple(accs), tuple(f1s))
