"""Independent reference implementations used to pin expected values.

Everything here is deliberately naive: exact rational arithmetic, plain
loops and brute force. None of it shares code with the library.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------- regression

def normal_equation_fit(t, values, t_start, t_end, degree):
    """Exact least-squares coefficients (c2, c1, c0) by Cramer's rule on the
    normal equations, with every input float converted to a Fraction."""
    t0, t1 = Fraction(t_start), Fraction(t_end)
    u = [(Fraction(x) - t0) / (t1 - t0) for x in t]
    y = [Fraction(v) for v in values]
    m = degree + 1
    # powers[k] = sum u^k, moments[k] = sum y u^k
    powers = [sum(ui ** k for ui in u) for k in range(2 * m - 1)]
    moments = [sum(yi * ui ** k for ui, yi in zip(u, y)) for k in range(m)]
    a = [[powers[i + j] for j in range(m)] for i in range(m)]
    det = _det(a)
    sol = []
    for col in range(m):
        ac = [row[:] for row in a]
        for i in range(m):
            ac[i][col] = moments[i]
        sol.append(_det(ac) / det)
    # sol[k] multiplies u^k
    if degree == 1:
        return (Fraction(0), sol[1], sol[0])
    return (sol[2], sol[1], sol[0])


def _det(a):
    if len(a) == 1:
        return a[0][0]
    if len(a) == 2:
        return a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return sum((-1) ** j * a[0][j] * _det([row[:j] + row[j + 1:] for row in a[1:]])
               for j in range(len(a)))


def brute_gof(t, values, t_start, t_end, coefs):
    """R2 and RMSE against the curve c2 u^2 + c1 u + c0, with plain loops."""
    c2, c1, c0 = coefs
    n = len(values)
    pred = []
    for x in t:
        u = (x - t_start) / (t_end - t_start)
        pred.append(c2 * u * u + c1 * u + c0)
    ss_res = sum((v - p) ** 2 for v, p in zip(values, pred))
    mean = sum(values) / n
    ss_tot = sum((v - mean) ** 2 for v in values)
    r2 = (1.0 if ss_res == 0 else -1e6) if ss_tot == 0 else 1 - ss_res / ss_tot
    return r2, math.sqrt(ss_res / n)


# ---------------------------------------------------------------- trees

def gini(labels):
    n = len(labels)
    if n == 0:
        return Fraction(0)
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return 1 - sum(Fraction(c, n) ** 2 for c in counts.values())


def weighted_gini_decrease(labels, go_left):
    n = len(labels)
    lhs = [lab for lab, g in zip(labels, go_left) if g]
    rhs = [lab for lab, g in zip(labels, go_left) if not g]
    return gini(labels) - Fraction(len(lhs), n) * gini(lhs) - Fraction(len(rhs), n) * gini(rhs)


def candidate_splits(rows):
    """All (feature, threshold) midpoints between consecutive unique values."""
    out = []
    for f in range(len(rows[0])):
        vals = sorted({Fraction(r[f]) for r in rows})
        for a, b in zip(vals, vals[1:]):
            out.append((f, (a + b) / 2))
    return out


def exhaustive_best_split(rows, labels):
    """Max exact Gini decrease; ties go to lower feature, then lower threshold."""
    best = None
    for f, thr in candidate_splits(rows):
        go_left = [Fraction(r[f]) <= thr for r in rows]
        gain = weighted_gini_decrease(labels, go_left)
        key = (-gain, f, thr)
        if best is None or key < best[0]:
            best = (key, f, thr)
    return None if best is None else (best[1], best[2])


def oracle_tree(rows, labels, max_depth=8, min_samples_split=2, depth=0):
    """Nested dict in the same layout as the library's tree JSON, with class
    names in place of count vectors at the leaves."""
    classes = sorted(set(labels))
    if depth >= max_depth or len(rows) < min_samples_split or len(classes) == 1:
        return {"leaf": _majority(labels)}
    split = exhaustive_best_split(rows, labels)
    if split is None:
        return {"leaf": _majority(labels)}
    f, thr = split
    left = [i for i, r in enumerate(rows) if Fraction(r[f]) <= thr]
    right = [i for i, r in enumerate(rows) if Fraction(r[f]) > thr]
    return {
        "feature": f, "threshold": thr,
        "left": oracle_tree([rows[i] for i in left], [labels[i] for i in left],
                            max_depth, min_samples_split, depth + 1),
        "right": oracle_tree([rows[i] for i in right], [labels[i] for i in right],
                             max_depth, min_samples_split, depth + 1),
    }


def _majority(labels):
    counts = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    return min(counts, key=lambda c: (-counts[c], c))


def library_tree_as_oracle_layout(doc, classes):
    """Convert library tree JSON (count vectors at leaves) to the oracle layout."""
    if "value" in doc:
        counts = doc["value"]
        return {"leaf": classes[int(np.argmax(counts))]}
    return {
        "feature": doc["feature"], "threshold": Fraction(doc["threshold"]),
        "left": library_tree_as_oracle_layout(doc["left"], classes),
        "right": library_tree_as_oracle_layout(doc["right"], classes),
    }


def best_depth2_accuracy(rows, labels):
    """Brute force over every depth-2 tree built from candidate midpoints."""
    cands = candidate_splits(rows)
    classes = sorted(set(labels))

    def leaf_correct(idx):
        if not idx:
            return 0
        return max(sum(labels[i] == c for i in idx) for c in classes)

    best = 0
    for f, thr in cands:
        left = [i for i, r in enumerate(rows) if Fraction(r[f]) <= thr]
        right = [i for i, r in enumerate(rows) if Fraction(r[f]) > thr]
        best_left = max([leaf_correct(left)] + [
            leaf_correct([i for i in left if Fraction(rows[i][g]) <= s])
            + leaf_correct([i for i in left if Fraction(rows[i][g]) > s]) for g, s in cands])
        best_right = max([leaf_correct(right)] + [
            leaf_correct([i for i in right if Fraction(rows[i][g]) <= s])
            + leaf_correct([i for i in right if Fraction(rows[i][g]) > s]) for g, s in cands])
        best = max(best, best_left + best_right)
    return Fraction(best, len(rows))


# ---------------------------------------------------------------- data

def blobs(n_per_class, n_features=8, n_classes=3, sigma=1.0, spread=10.0, seed=0):
    """Isotropic Gaussian blobs whose centres sit ``spread`` apart on the axes.

    Returns (X, labels, margin) where margin is the smallest centre distance
    in units of sigma, a crude separability certificate.
    """
    rng = np.random.default_rng(seed)
    centres = np.zeros((n_classes, n_features))
    for c in range(n_classes):
        centres[c, c % n_features] = spread * (1 + c // n_features)
    X = np.vstack([centres[c] + sigma * rng.standard_normal((n_per_class, n_features))
                   for c in range(n_classes)])
    labels = [f"C{c}" for c in range(n_classes) for _ in range(n_per_class)]
    margin = min(np.linalg.norm(centres[i] - centres[j])
                 for i, j in itertools.combinations(range(n_classes), 2)) / sigma
    return X, labels, margin


def confusion_scores(cm):
    """Accuracy and per-class F1 from a confusion matrix, as Fractions."""
    k = len(cm)
    total = sum(sum(r) for r in cm)
    acc = Fraction(sum(cm[i][i] for i in range(k)), total)
    f1 = []
    for i in range(k):
        tp = cm[i][i]
        pred = sum(cm[r][i] for r in range(k))
        true = sum(cm[i])
        p = Fraction(tp, pred) if pred else Fraction(0)
        r = Fraction(tp, true) if true else Fraction(0)
        f1.append(2 * p * r / (p + r) if p + r else Fraction(0))
    return acc, f1


def generator_boundaries(spec):
    """Phase intervals of every scenario in a synthetic corpus, replayed from
    the timing draws alone (no trace, no event log, no pairing).

    Returns {scenario_index: {phase: [(start, end), ...]}}.
    """
    tpl = spec.template
    out = {}
    for i, (batch, _core, reps, _label) in enumerate(spec.scenario_grid()):
        seed = int(np.random.SeedSequence([spec.seed, i]).generate_state(1)[0])
        timing = np.random.SeedSequence(seed).spawn(3)[0]
        cycles = tpl.cycles * reps
        scale = spec.input_batches[batch]
        z = np.random.Generator(np.random.PCG64(timing)).standard_normal((cycles, len(tpl.phases)))
        phases = {p.name: [] for p in tpl.phases}
        phases[tpl.outer_phase] = []
        t = 0.0
        for c in range(cycles):
            c0 = t
            for j, p in enumerate(tpl.phases):
                mean, sd = p.duration_mean * scale, p.duration_sd * scale
                d = max(mean + sd * float(z[c, j]), 0.1 * mean)
                phases[p.name].append((t, t + d))
                t = t + d
            phases[tpl.outer_phase].append((c0, t))
            t += tpl.idle_gap
        out[i] = phases
    return out
