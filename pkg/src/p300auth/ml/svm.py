"""C-SVC with an RBF kernel trained by SMO (second-order working-set selection)."""
from __future__ import annotations

import logging

import numpy as np
from numba import njit

from .estimators import BaseClassifier

logger = logging.getLogger(__name__)

_TAU = 1e-12
FULL_KERNEL_MAX = 9000


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    sq = (np.einsum("ij,ij->i", A, A)[:, None] + np.einsum("ij,ij->i", B, B)[None, :]
          - 2.0 * A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


@njit(cache=True)
def _fill_row(X, sqn, gamma, i, out):
    n, p = X.shape
    for t in range(n):
        d = 0.0
        for k in range(p):
            diff = X[i, k] - X[t, k]
            d += diff * diff
        out[t] = np.exp(-gamma * d)


@njit(cache=True)
def _row(X, sqn, gamma, cache, slot_of, owner, clock, i):
    s = slot_of[i]
    if s >= 0:
        return cache[s]
    s = clock[0]
    clock[0] = (s + 1) % cache.shape[0]
    if owner[s] >= 0:
        slot_of[owner[s]] = -1
    owner[s] = i
    slot_of[i] = s
    _fill_row(X, sqn, gamma, i, cache[s])
    return cache[s]


@njit(cache=True)
def _smo(X, sqn, gamma, y, C, eps, max_iter, cache, slot_of, owner, clock):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it = 0
    while it < max_iter:
        # i maximises -y G over I_up
        gmax = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0):
                v = -y[t] * grad[t]
                if v >= gmax:
                    gmax = v
                    i = t
        if i < 0:
            break
        ki = _row(X, sqn, gamma, cache, slot_of, owner, clock, i)
        gmax2 = -np.inf
        j = -1
        obj_min = np.inf
        for t in range(n):
            if (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C):
                v = y[t] * grad[t]
                if v >= gmax2:
                    gmax2 = v
                b = gmax + v
                if b > 0:
                    a = 2.0 - 2.0 * ki[t]
                    if a <= 0:
                        a = _TAU
                    obj = -(b * b) / a
                    if obj <= obj_min:
                        obj_min = obj
                        j = t
        if gmax + gmax2 < eps or j < 0:
            break
        it += 1
        kj = _row(X, sqn, gamma, cache, slot_of, owner, clock, j)
        ki = _row(X, sqn, gamma, cache, slot_of, owner, clock, i)
        kij = ki[j]
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = 2.0 - 2.0 * kij
            if quad <= 0:
                quad = _TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = 2.0 - 2.0 * kij
            if quad <= 0:
                quad = _TAU
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total
        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj)

    # bias from free vectors, else the midpoint of the feasible interval
    ub = np.inf
    lb = -np.inf
    sfree = 0.0
    nfree = 0
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree > 0 else (ub + lb) / 2.0
    return alpha, rho, it


class SVM(BaseClassifier):
    """Binary RBF support vector machine, ``C = 1``, ``gamma = 1 / (p * Var(X))``.

    Training stops when the maximal KKT violation drops below ``tol``.  Scores
    are signed margins (negated for the first class).
    """

    binary_only = True

    def __init__(self, C: float = 1.0, gamma: float | str = "scale", tol: float = 1e-3,
                 max_iter: int | None = None, cache_mb: float = 700.0):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.cache_mb = cache_mb

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        X = np.ascontiguousarray(X)
        n, p = X.shape
        if self.gamma == "scale":
            var = X.var()
            self.gamma_ = 1.0 / (p * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)
        ys = np.where(y == self.classes_[1], 1.0, -1.0)
        sqn = np.einsum("ij,ij->i", X, X)
        slots = int(self.cache_mb * 2**20 // (8 * n))
        if n <= FULL_KERNEL_MAX and slots >= n:
            cache = rbf_kernel(X, X, self.gamma_)
            slot_of = np.arange(n, dtype=np.int64)
            owner = np.arange(n, dtype=np.int64)
        else:
            slots = max(2, min(slots, n))
            cache = np.empty((slots, n))
            slot_of = np.full(n, -1, dtype=np.int64)
            owner = np.full(slots, -1, dtype=np.int64)
        clock = np.zeros(1, dtype=np.int64)
        max_iter = self.max_iter or max(10_000_000, 100 * n)
        alpha, rho, it = _smo(X, sqn, self.gamma_, ys, float(self.C), self.tol, max_iter,
                              cache, slot_of, owner, clock)
        if it >= max_iter:
            logger.warning("SMO reached max_iter=%d before meeting tol", max_iter)
        sv = alpha > 0
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv]
        self.dual_coef_ = (alpha * ys)[sv]
        self.intercept_ = -rho
        self.n_iter_ = it
        return self

    def decision_function(self, X):
        X = self._check_predict(X)
        out = np.empty(len(X))
        for lo in range(0, len(X), 2048):
            k = rbf_kernel(X[lo:lo + 2048], self.support_vectors_, self.gamma_)
            out[lo:lo + 2048] = k @ self.dual_coef_ + self.intercept_
        return out

    def scores(self, X):
        d = self.decision_function(X)
        return np.column_stack([-d, d])
