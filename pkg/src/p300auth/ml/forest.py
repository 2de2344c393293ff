"""Random forest of fully grown Gini trees, compiled with numba."""
from __future__ import annotations

import numpy as np
from numba import njit

from .estimators import BaseClassifier

# splits need a gap larger than this between consecutive sorted values
_FEATURE_EPS = 1e-7


@njit(cache=True)
def _build_tree(X, y, n_classes, sample, mtry, seed):
    np.random.seed(seed)
    n = sample.shape[0]
    p = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros((cap, n_classes))

    idx = sample.copy()
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0], stack_lo[0], stack_hi[0] = 0, 0, n
    top = 1
    n_nodes = 1
    features = np.arange(p)
    counts_l = np.zeros(n_classes)
    counts = np.zeros(n_classes)
    vals = np.empty(n)

    while top > 0:
        top -= 1
        node, lo, hi = stack_node[top], stack_lo[top], stack_hi[top]
        m = hi - lo
        counts[:] = 0.0
        for t in range(lo, hi):
            counts[y[idx[t]]] += 1.0
        for c in range(n_classes):
            value[node, c] = counts[c] / m
        n_nonzero = 0
        for c in range(n_classes):
            if counts[c] > 0:
                n_nonzero += 1
        if n_nonzero <= 1 or m < 2:
            continue

        best_score = -1.0
        best_f = -1
        best_thr = 0.0
        visited = 0
        k = 0
        # draw features without replacement until mtry non-constant ones were scanned
        while k < p and visited < mtry:
            j = k + np.random.randint(p - k)
            tmp = features[k]
            features[k] = features[j]
            features[j] = tmp
            f = features[k]
            k += 1
            for t in range(m):
                vals[t] = X[idx[lo + t], f]
            order = np.argsort(vals[:m])
            if vals[order[m - 1]] <= vals[order[0]] + _FEATURE_EPS:
                continue
            visited += 1
            counts_l[:] = 0.0
            for t in range(m - 1):
                counts_l[y[idx[lo + order[t]]]] += 1.0
                v0 = vals[order[t]]
                v1 = vals[order[t + 1]]
                if v1 <= v0 + _FEATURE_EPS:
                    continue
                nl = t + 1.0
                nr = m - nl
                sl = 0.0
                sr = 0.0
                for c in range(n_classes):
                    sl += counts_l[c] * counts_l[c]
                    r = counts[c] - counts_l[c]
                    sr += r * r
                score = sl / nl + sr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    thr = (v0 + v1) / 2.0
                    if thr >= v1:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue

        i, j = lo, hi - 1
        while i <= j:
            if X[idx[i], best_f] <= best_thr:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[top], stack_lo[top], stack_hi[top] = n_nodes, lo, i
        top += 1
        stack_node[top], stack_lo[top], stack_hi[top] = n_nodes + 1, i, hi
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def _apply_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = np.argmax(value[node])
    return out


class RandomForest(BaseClassifier):
    """Bagged Gini trees with sqrt(p) candidate features per split.

    Trees grow until leaves are pure.  All randomness (bootstrap draws and
    feature sampling) derives from ``random_state``.  Scores are the fraction
    of trees voting for each class.
    """

    def __init__(self, n_estimators: int = 100, random_state: int = 42,
                 max_features: int | None = None):
        self.n_estimators = n_estimators
        self.random_state = random_state
        self.max_features = max_features

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        X = np.ascontiguousarray(X)
        y_idx = np.searchsorted(self.classes_, y).astype(np.int64)
        n, p = X.shape
        mtry = self.max_features or max(1, int(np.sqrt(p)))
        rs = np.random.RandomState(self.random_state)
        seeds = rs.randint(np.iinfo(np.int32).max, size=self.n_estimators)
        self.trees_ = []
        for seed in seeds:
            sample = np.random.RandomState(seed).randint(0, n, n).astype(np.int64)
            self.trees_.append(_build_tree(X, y_idx, len(self.classes_), sample, mtry,
                                           int(seed)))
        return self

    def scores(self, X):
        X = np.ascontiguousarray(self._check_predict(X))
        votes = np.zeros((len(X), len(self.classes_)))
        rows = np.arange(len(X))
        for tree in self.trees_:
            votes[rows, _apply_tree(X, *tree)] += 1.0
        return votes / len(self.trees_)

    @property
    def node_counts(self) -> list[int]:
        return [len(t[0]) for t in self.trees_]
