"""Array-backed binary trees grown by greedy split search.

One grower serves classification (one-hot targets, Gini) and boosting
(single residual column, squared error): for a split into left/right parts
both criteria reduce to maximising

    S = sum_k L_k**2 / n_L + sum_k R_k**2 / n_R

where ``L_k``/``R_k`` are column sums of the target matrix over each side.
For one-hot targets ``n - S`` is the weighted child Gini impurity, for a
residual column it is the SSE up to a constant.

Samples go left when ``x <= threshold``. Ties between equally good splits
go to the lower feature index, then to the lower threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

LEAF = -1
# relative slack for calling two split scores equal
TIE_RTOL = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 8
    min_samples_split: int = 2
    n_candidate_features: str = "all"  # "all" or "sqrt"

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.n_candidate_features not in ("all", "sqrt"):
            raise ValueError("n_candidate_features must be 'all' or 'sqrt'")


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, n_outputs): class counts or leaf values

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        rows = np.arange(len(X))
        while active.any():
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def splits(self) -> list[tuple[int, int, float]]:
        """(node, feature, threshold) for every internal node, by node id."""
        return [(i, int(self.feature[i]), float(self.threshold[i]))
                for i in range(self.n_nodes) if self.feature[i] != LEAF]

    def to_json(self, node: int = 0) -> dict:
        if self.feature[node] == LEAF:
            return {"value": self.value[node].tolist()}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "left": self.to_json(int(self.left[node])),
            "right": self.to_json(int(self.right[node])),
        }

    @classmethod
    def from_json(cls, doc: dict) -> Tree:
        feature, threshold, left, right, value = [], [], [], [], []

        def visit(d) -> int:
            i = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(None)
            if "value" in d:
                value[i] = d["value"]
                return i
            feature[i] = d["feature"]
            threshold[i] = d["threshold"]
            left[i] = visit(d["left"])
            right[i] = visit(d["right"])
            return i

        visit(doc)
        width = max(len(v) for v in value if v is not None)
        vals = np.array([v if v is not None else [0.0] * width for v in value], dtype=float)
        return cls(np.array(feature), np.array(threshold, dtype=float),
                   np.array(left), np.array(right), vals)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("feature", "threshold", "left", "right", "value"))


def split_score(left_sums: np.ndarray, n_left, total: np.ndarray, n) -> np.ndarray:
    """``S`` for candidate splits; sums broadcast over leading axes."""
    n_right = n - n_left
    right_sums = total - left_sums
    return ((left_sums ** 2).sum(-1) / n_left) + ((right_sums ** 2).sum(-1) / n_right)


def _midpoint(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid = a + (b - a) / 2.0
    # adjacent floats: the midpoint may round up onto b
    return np.where(mid < b, mid, a)


def best_exhaustive_split(X, Y, orders, mask, n_node, feats):
    """Best (feature, threshold, score) over all midpoints, or None."""
    o = orders[feats]
    s = o[mask[o]].reshape(len(feats), n_node)
    xs = X[s, feats[:, None]]
    cum = np.cumsum(Y[s], axis=1)
    total = cum[0, -1]
    left = cum[:, :-1, :]
    n_left = np.arange(1, n_node)
    score = split_score(left, n_left[None, :], total, n_node)
    valid = xs[:, :-1] < xs[:, 1:]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    best = score.max()
    tied = score >= best - TIE_RTOL * abs(best)
    fi = int(np.argmax(tied.any(axis=1)))
    pos = int(np.argmax(tied[fi]))
    thr = float(_midpoint(xs[fi, pos], xs[fi, pos + 1]))
    return int(feats[fi]), thr, float(score[fi, pos])


def best_random_split(X, Y, idx, feats, rng):
    """Extra-Trees split: one uniform threshold per non-constant feature."""
    Xn = X[idx][:, feats]
    Yn = Y[idx]
    lo, hi = Xn.min(axis=0), Xn.max(axis=0)
    live = lo < hi
    if not live.any():
        return None
    feats, Xn, lo, hi = feats[live], Xn[:, live], lo[live], hi[live]
    thr = rng.uniform(lo, hi)
    thr = np.where(thr < hi, thr, lo)
    go_left = (Xn <= thr).astype(float)
    score = split_score(go_left.T @ Yn, go_left.sum(axis=0), Yn.sum(axis=0), len(idx))
    best = score.max()
    i = int(np.argmax(score >= best - TIE_RTOL * abs(best)))
    return int(feats[i]), float(thr[i]), float(score[i])


def grow_tree(X: np.ndarray, Y: np.ndarray, params: TreeParams, rng: np.random.Generator,
              random_thresholds: bool = False,
              leaf_value: Callable[[np.ndarray], np.ndarray] | None = None,
              check: bool = False) -> Tree:
    """Grow one tree depth-first (left child before right).

    ``Y`` is the (n, k) target matrix. Leaves store ``Y`` column sums unless
    ``leaf_value`` maps the leaf's row indices to its output vector. With
    ``check`` every exhaustive split is re-verified by a plain rescan.
    """
    n, n_features = X.shape
    orders = np.argsort(X, axis=0, kind="stable").T if not random_thresholds else None
    n_cand = n_features if params.n_candidate_features == "all" else int(np.ceil(np.sqrt(n_features)))

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(None)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        Yn = Y[idx]
        value[node] = leaf_value(idx) if leaf_value is not None else Yn.sum(axis=0)
        if depth >= params.max_depth or len(idx) < params.min_samples_split:
            continue
        if np.all(Yn == Yn[0]):
            continue
        if n_cand == n_features:
            feats = np.arange(n_features)
        else:
            feats = np.sort(rng.choice(n_features, size=n_cand, replace=False))
        if random_thresholds:
            found = best_random_split(X, Y, idx, feats, rng)
        else:
            mask = np.zeros(n, dtype=bool)
            mask[idx] = True
            found = best_exhaustive_split(X, Y, orders, mask, len(idx), feats)
            if check and found is not None:
                _rescan(X, Y, idx, feats, found)
        if found is None:
            continue
        f, thr, _ = found
        go_left = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = new_node()
        right[node] = new_node()
        # push right first so the left subtree is grown (and numbered) first
        stack.append((right[node], idx[~go_left], depth + 1))
        stack.append((left[node], idx[go_left], depth + 1))

    width = len(value[0])
    return Tree(np.array(feature), np.array(threshold, dtype=float), np.array(left),
                np.array(right), np.array(value, dtype=float).reshape(-1, width))


def _rescan(X, Y, idx, feats, found) -> None:
    total = Y[idx].sum(axis=0)
    n = len(idx)
    best = found[2]
    for f in feats.tolist():
        vals = np.unique(X[idx, f])
        for a, b in zip(vals[:-1], vals[1:]):
            go_left = X[idx, f] <= _midpoint(np.array(a), np.array(b))
            s = float(split_score(Y[idx][go_left].sum(axis=0), go_left.sum(), total, n))
            assert s <= best + TIE_RTOL * abs(best) + 1e-12, (f, a, b, s, best)
