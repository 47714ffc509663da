"""Tree-based multi-class classifiers: DT, RF, ET and gradient-boosted trees."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from ..core import InfoPosError
from ..features import FEATURE_COLUMNS, Dataset, SchemaMismatch
from ..ingest import make_rng
from .tree import Tree, TreeParams, grow_tree

MODEL_FORMAT = "infopos-model"


class DegenerateDataset(InfoPosError):
    pass


@dataclass(frozen=True)
class EnsembleParams:
    n_trees: int = 100
    bootstrap: bool = True
    random_thresholds: bool = False
    learning_rate: float = 0.1
    n_rounds: int = 100
    boost_depth: int = 3

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")


@dataclass(frozen=True, eq=False)
class Model:
    """A fitted classifier; immutable and safe to share between workers.

    For ``BDT`` ``trees`` holds ``n_rounds * n_classes`` regression trees in
    round-major order and ``init_score`` the log class priors.
    """

    algorithm: str
    classes: tuple[str, ...]
    trees: tuple[Tree, ...]
    params: Mapping = field(default_factory=dict)
    provenance: Mapping = field(default_factory=dict)
    init_score: tuple[float, ...] = ()
    learning_rate: float = 1.0

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "algorithm": self.algorithm,
            "classes": list(self.classes),
            "params": dict(self.params),
            "provenance": dict(self.provenance),
            "init_score": list(self.init_score),
            "learning_rate": self.learning_rate,
            "trees": [t.to_json() for t in self.trees],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> Model:
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError("not a model file")
        return cls(doc["algorithm"], tuple(doc["classes"]),
                   tuple(Tree.from_json(t) for t in doc["trees"]),
                   doc.get("params", {}), doc.get("provenance", {}),
                   tuple(doc.get("init_score", ())), float(doc.get("learning_rate", 1.0)))

    def __eq__(self, other):
        if not isinstance(other, Model):
            return NotImplemented
        return self.to_json() == other.to_json()


def save_model(model: Model, path) -> None:
    Path(path).write_text(json.dumps(model.to_json(), sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> Model:
    return Model.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def dataset_hash(ds: Dataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(ds.X).tobytes())
    h.update("\x1f".join(ds.labels).encode("utf-8"))
    return h.hexdigest()[:16]


def _encode(ds: Dataset) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    if len(ds) == 0:
        raise DegenerateDataset("cannot train on zero rows")
    classes = ds.classes
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[lab] for lab in ds.labels])
    return ds.X, y, classes


def _onehot(y: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((len(y), k))
    out[np.arange(len(y)), y] = 1.0
    return out


def _provenance(ds: Dataset, seed: int) -> dict:
    return {"dataset_hash": dataset_hash(ds), "seed": int(seed), "rows": len(ds)}


def train_decision_tree(dataset: Dataset, params: TreeParams = TreeParams(), seed: int = 0,
                        check: bool = False) -> Model:
    X, y, classes = _encode(dataset)
    tree = grow_tree(X, _onehot(y, len(classes)), params, make_rng(seed), check=check)
    return Model("DT", classes, (tree,), {"tree": asdict(params)}, _provenance(dataset, seed))


def _forest(algorithm: str, dataset: Dataset, ens: EnsembleParams, tree_params: TreeParams,
            seed: int, bootstrap: bool, random_thresholds: bool) -> Model:
    X, y, classes = _encode(dataset)
    Y = _onehot(y, len(classes))
    trees = []
    for i in range(ens.n_trees):
        rng = make_rng(seed, i)
        if bootstrap:
            rows = rng.integers(0, len(X), size=len(X))
            Xb, Yb = X[rows], Y[rows]
        else:
            Xb, Yb = X, Y
        trees.append(grow_tree(Xb, Yb, tree_params, rng, random_thresholds=random_thresholds))
    params = {"ensemble": asdict(ens), "tree": asdict(tree_params)}
    return Model(algorithm, classes, tuple(trees), params, _provenance(dataset, seed))


def train_random_forest(dataset: Dataset, ensemble_params: EnsembleParams = EnsembleParams(),
                        tree_params: TreeParams = TreeParams(n_candidate_features="sqrt"),
                        seed: int = 0) -> Model:
    """Bootstrap-resampled CART trees combined by majority vote."""
    return _forest("RF", dataset, ensemble_params, tree_params, seed,
                   ensemble_params.bootstrap, False)


def train_extra_trees(dataset: Dataset,
                      ensemble_params: EnsembleParams = EnsembleParams(bootstrap=False,
                                                                       random_thresholds=True),
                      tree_params: TreeParams = TreeParams(n_candidate_features="sqrt"),
                      seed: int = 0) -> Model:
    """Full-sample trees with one uniform random threshold per candidate feature."""
    return _forest("ET", dataset, ensemble_params, tree_params, seed, False, True)


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def train_boosted_trees(dataset: Dataset, ensemble_params: EnsembleParams = EnsembleParams(),
                        tree_params: TreeParams | None = None, seed: int = 0) -> Model:
    """Multi-class gradient boosting on the softmax cross-entropy loss.

    Each round fits one regression tree per class to ``onehot - softmax``
    and sets leaf values by a single Newton step,
    ``(K-1)/K * sum(r) / sum(|r| (1 - |r|))``.
    """
    X, y, classes = _encode(dataset)
    k = len(classes)
    if tree_params is None:
        tree_params = TreeParams(max_depth=ensemble_params.boost_depth)
    Y = _onehot(y, k)
    prior = Y.mean(axis=0)
    init = np.log(np.clip(prior, 1e-12, None))
    scores = np.tile(init, (len(X), 1))
    lr = ensemble_params.learning_rate
    trees = []
    rng = make_rng(seed)
    if k == 1:
        n_rounds = 0
    else:
        n_rounds = ensemble_params.n_rounds
    for _ in range(n_rounds):
        prob = _softmax(scores)
        resid = Y - prob
        for c in range(k):
            r = resid[:, c]

            def newton(idx, r=r):
                num = r[idx].sum()
                den = (np.abs(r[idx]) * (1.0 - np.abs(r[idx]))).sum()
                return np.array([0.0 if den < 1e-150 else (k - 1) / k * num / den])

            tree = grow_tree(X, r[:, None], tree_params, rng, leaf_value=newton)
            scores[:, c] += lr * tree.predict_value(X)[:, 0]
            trees.append(tree)
    params = {"ensemble": asdict(ensemble_params), "tree": asdict(tree_params)}
    return Model("BDT", classes, tuple(trees), params, _provenance(dataset, seed),
                 tuple(float(v) for v in init), lr)


def _as_matrix(rows) -> np.ndarray:
    if isinstance(rows, Dataset):
        return rows.X
    if len(rows) and hasattr(rows[0], "features"):
        return np.array([r.features for r in rows], dtype=float)
    X = np.asarray(rows, dtype=float)
    if X.size == 0:
        return X.reshape(0, len(FEATURE_COLUMNS))
    return X


def decision_scores(model: Model, X: np.ndarray) -> np.ndarray:
    k = len(model.classes)
    if model.algorithm == "BDT":
        scores = np.tile(np.array(model.init_score), (len(X), 1))
        for i, tree in enumerate(model.trees):
            scores[:, i % k] += model.learning_rate * tree.predict_value(X)[:, 0]
        return scores
    votes = np.zeros((len(X), k))
    rows = np.arange(len(X))
    for tree in model.trees:
        # argmax keeps the first maximum, i.e. the earliest class in class order
        votes[rows, np.argmax(tree.predict_value(X), axis=1)] += 1
    return votes


def predict(model: Model, rows) -> list[str]:
    X = _as_matrix(rows)
    if len(X) == 0:
        return []
    if X.ndim != 2 or X.shape[1] != len(FEATURE_COLUMNS):
        raise SchemaMismatch(f"expected {len(FEATURE_COLUMNS)} feature columns, got {X.shape}")
    if len(model.classes) == 1:
        return [model.classes[0]] * len(X)
    idx = np.argmax(decision_scores(model, X), axis=1)
    return [model.classes[i] for i in idx]


# --------------------------------------------------------------------------
# registry

ModelFactory = Callable[[Dataset, int], Model]


@dataclass(frozen=True)
class MLConfig:
    tree: TreeParams = TreeParams()
    forest_tree: TreeParams = TreeParams(n_candidate_features="sqrt")
    n_trees: int = 100
    n_rounds: int = 100
    boost_depth: int = 3
    learning_rate: float = 0.1

    @classmethod
    def from_json(cls, doc: Mapping) -> MLConfig:
        doc = dict(doc)
        kw = {}
        if "max_depth" in doc or "min_samples_split" in doc:
            kw["tree"] = TreeParams(doc.get("max_depth", 8), doc.get("min_samples_split", 2))
            kw["forest_tree"] = TreeParams(doc.get("max_depth", 8), doc.get("min_samples_split", 2),
                                           "sqrt")
        for k in ("n_trees", "n_rounds", "boost_depth", "learning_rate"):
            if k in doc:
                kw[k] = doc[k]
        return cls(**kw)

    def to_json(self) -> dict:
        return {"max_depth": self.tree.max_depth, "min_samples_split": self.tree.min_samples_split,
                "n_trees": self.n_trees, "n_rounds": self.n_rounds,
                "boost_depth": self.boost_depth, "learning_rate": self.learning_rate}


def _dt(cfg: MLConfig) -> ModelFactory:
    return lambda ds, seed: train_decision_tree(ds, cfg.tree, seed)


def _rf(cfg: MLConfig) -> ModelFactory:
    ens = EnsembleParams(n_trees=cfg.n_trees, bootstrap=True)
    return lambda ds, seed: train_random_forest(ds, ens, cfg.forest_tree, seed)


def _et(cfg: MLConfig) -> ModelFactory:
    ens = EnsembleParams(n_trees=cfg.n_trees, bootstrap=False, random_thresholds=True)
    return lambda ds, seed: train_extra_trees(ds, ens, cfg.forest_tree, seed)


def _bdt(cfg: MLConfig) -> ModelFactory:
    ens = EnsembleParams(n_rounds=cfg.n_rounds, learning_rate=cfg.learning_rate,
                         boost_depth=cfg.boost_depth)
    tp = TreeParams(max_depth=cfg.boost_depth)
    return lambda ds, seed: train_boosted_trees(ds, ens, tp, seed)


ALGORITHMS: dict[str, Callable[[MLConfig], ModelFactory]] = {
    "BDT": _bdt,
    "DT": _dt,
    "ET": _et,
    "RF": _rf,
}
# named in the original study but outside the tree-based scope
UNIMPLEMENTED = ("NB", "SVM", "SVC")


def register_algorithm(name: str, builder: Callable[[MLConfig], ModelFactory]) -> None:
    """Plug in another learner; ``builder(cfg)`` returns ``factory(dataset, seed)``."""
    ALGORITHMS[name] = builder


def model_factory(name: str, cfg: MLConfig = MLConfig()) -> ModelFactory:
    if name in ALGORITHMS:
        return ALGORITHMS[name](cfg)
    if name in UNIMPLEMENTED:
        raise NotImplementedError(
            f"{name} has no built-in implementation; use register_algorithm to add one")
    raise ValueError(f"unknown algorithm {name!r}; known: {sorted(ALGORITHMS)}")
