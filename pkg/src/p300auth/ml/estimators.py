"""Classifiers with explicit, documented defaults.

Every estimator exposes ``fit(X, y)``, ``predict(X)`` and ``scores(X)``; the
latter returns one column per entry of ``classes_`` and its row-wise argmax
(first maximum, i.e. smallest label on ties) is the prediction.
"""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.linalg import eigh, solve_triangular
from scipy.optimize import minimize
from scipy.special import expit, log_expit, logsumexp

from .spd import check_spd, ledoit_wolf, riemannian_distance, riemannian_mean

logger = logging.getLogger(__name__)


class FitError(ValueError):
    pass


class BaseClassifier:
    binary_only = False

    def _check_fit(self, X, y, ndim: int = 2):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != ndim:
            raise ValueError(f"{type(self).__name__} expects {ndim}-D input, got {X.ndim}-D")
        if len(X) != len(y):
            raise ValueError("X and y lengths differ")
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise FitError(f"{type(self).__name__} needs at least two classes, "
                           f"got {self.classes_.tolist()}")
        if self.binary_only and len(self.classes_) > 2:
            raise FitError(f"{type(self).__name__} is binary; wrap it in OneVsRest")
        self.n_features_ = X.shape[1:]
        return X, y

    def _check_predict(self, X):
        if not hasattr(self, "classes_"):
            raise RuntimeError(f"{type(self).__name__} is not fitted")
        X = np.asarray(X, dtype=float)
        if X.shape[1:] != self.n_features_:
            raise ValueError(f"expected samples of shape {self.n_features_}, got {X.shape[1:]}")
        return X

    def predict(self, X):
        return self.classes_[np.argmax(self.scores(X), axis=1)]


class LogisticRegression(BaseClassifier):
    """Binary L2 logistic regression minimised with L-BFGS.

    Objective ``0.5 ||w||^2 + C * sum log(1 + exp(-s (x.w + b)))``; the
    intercept is not penalised.  Scores are class probabilities.
    """

    binary_only = True

    def __init__(self, C: float = 1.0, tol: float = 1e-4, max_iter: int = 100):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        s = np.where(y == self.classes_[1], 1.0, -1.0)
        n, p = X.shape

        def obj(theta):
            w, b = theta[:p], theta[p]
            z = s * (X @ w + b)
            loss = 0.5 * w @ w - self.C * np.sum(log_expit(z))
            g = -self.C * s * expit(-z)
            return loss, np.concatenate([w + X.T @ g, [g.sum()]])

        res = minimize(obj, np.zeros(p + 1), jac=True, method="L-BFGS-B",
                       options={"maxiter": self.max_iter, "gtol": self.tol})
        if not res.success:
            logger.info("logistic regression stopped: %s", res.message)
        self.coef_, self.intercept_ = res.x[:p], res.x[p]
        self.n_iter_ = res.nit
        return self

    def decision_function(self, X):
        X = self._check_predict(X)
        return X @ self.coef_ + self.intercept_

    def scores(self, X):
        p1 = expit(self.decision_function(X))
        return np.column_stack([1.0 - p1, p1])


def _shrunk_cov(X):
    """Ledoit-Wolf covariance on standardised features, rescaled back."""
    sc = X.std(axis=0)
    sc[sc == 0] = 1.0
    s, _ = ledoit_wolf(X / sc)
    return sc[:, None] * s * sc[None, :]


class LDA(BaseClassifier):
    """Linear discriminant analysis, eigen solver with Ledoit-Wolf shrinkage.

    The within-class scatter is the prior-weighted average of per-class
    shrunk covariances; discriminant directions solve ``Sb v = l Sw v``.
    Scores are posterior probabilities.
    """

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        self.priors_ = np.array([np.mean(y == c) for c in self.classes_])
        self.means_ = np.array([X[y == c].mean(axis=0) for c in self.classes_])
        sw = sum(p * _shrunk_cov(X[y == c]) for p, c in zip(self.priors_, self.classes_))
        st = _shrunk_cov(X)
        sb = st - sw
        evals, evecs = eigh(sb, sw)
        evecs = evecs[:, np.argsort(evals)[::-1]]
        self.scalings_ = evecs
        self.coef_ = (self.means_ @ evecs) @ evecs.T
        self.intercept_ = -0.5 * np.einsum("ij,ij->i", self.means_, self.coef_) + np.log(self.priors_)
        return self

    def decision_function(self, X):
        X = self._check_predict(X)
        return X @ self.coef_.T + self.intercept_

    def scores(self, X):
        d = self.decision_function(X)
        return np.exp(d - logsumexp(d, axis=1, keepdims=True))


class QDA(BaseClassifier):
    """Gaussian class-conditional model with per-class covariance.

    Each covariance (unbiased) receives a ridge of ``1e-6 * trace / p``.
    Scores are posterior probabilities.
    """

    def __init__(self, ridge: float = 1e-6):
        self.ridge = ridge

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        p = X.shape[1]
        self.priors_ = np.array([np.mean(y == c) for c in self.classes_])
        self.means_, self.chol_, self.logdet_ = [], [], []
        for c in self.classes_:
            xc = X[y == c]
            mu = xc.mean(axis=0)
            d = xc - mu
            cov = d.T @ d / max(len(xc) - 1, 1)
            eps = self.ridge * max(np.trace(cov), np.finfo(float).tiny) / p
            lower = np.linalg.cholesky(cov + eps * np.eye(p))
            self.means_.append(mu)
            self.chol_.append(lower)
            self.logdet_.append(2.0 * np.sum(np.log(np.diag(lower))))
        return self

    def log_posterior(self, X):
        X = self._check_predict(X)
        out = np.empty((len(X), len(self.classes_)))
        for k, (mu, lower, ld) in enumerate(zip(self.means_, self.chol_, self.logdet_)):
            z = solve_triangular(lower, (X - mu).T, lower=True)
            out[:, k] = -0.5 * (ld + np.sum(z**2, axis=0)) + np.log(self.priors_[k])
        return out - logsumexp(out, axis=1, keepdims=True)

    def scores(self, X):
        return np.exp(self.log_posterior(X))


class KNN(BaseClassifier):
    """k nearest neighbours (Euclidean), majority vote, ties to the smallest label.

    Scores are neighbour vote fractions.  Equal distances are ordered by
    training index.
    """

    def __init__(self, n_neighbors: int = 50):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X, y = self._check_fit(X, y)
        self.X_ = X
        self.y_idx_ = np.searchsorted(self.classes_, y)
        self.k_ = self.n_neighbors
        if len(X) < self.n_neighbors:
            warnings.warn(f"n_neighbors={self.n_neighbors} exceeds {len(X)} training samples; "
                          f"using {len(X)}", RuntimeWarning)
            self.k_ = len(X)
        self.sqn_ = np.einsum("ij,ij->i", X, X)
        return self

    def kneighbors(self, X):
        X = self._check_predict(X)
        k, n = self.k_, len(self.X_)
        margin = min(n, k + 16)
        chunk = max(1, min(1024, 2**22 // (margin * X.shape[1])))
        out = np.empty((len(X), k), dtype=int)
        for lo in range(0, len(X), chunk):
            xb = X[lo:lo + chunk]
            approx = np.einsum("ij,ij->i", xb, xb)[:, None] + self.sqn_ - 2.0 * xb @ self.X_.T
            cand = np.argpartition(approx, margin - 1, axis=1)[:, :margin] if margin < n \
                else np.broadcast_to(np.arange(n), (len(xb), n))
            exact = np.sum((xb[:, None, :] - self.X_[cand]) ** 2, axis=2)
            # lexsort by (distance, index) keeps the scan order on exact ties
            for r in range(len(xb)):
                o = np.lexsort((cand[r], exact[r]))[:k]
                out[lo + r] = cand[r][o]
        return out

    def scores(self, X):
        nb = self.kneighbors(X)
        votes = np.zeros((len(nb), len(self.classes_)))
        for c in range(len(self.classes_)):
            votes[:, c] = np.sum(self.y_idx_[nb] == c, axis=1)
        return votes / self.k_


class MDM(BaseClassifier):
    """Minimum distance to the per-class Riemannian mean.  Scores are negative distances."""

    def __init__(self, tol: float = 1e-8, max_iter: int = 50):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = self._check_fit(X, y, ndim=3)
        check_spd(X)
        self.covmeans_ = np.array([riemannian_mean(X[y == c], self.tol, self.max_iter)
                                   for c in self.classes_])
        return self

    def distances(self, X):
        X = check_spd(self._check_predict(X))
        return np.column_stack([riemannian_distance(m, X) for m in self.covmeans_])

    def scores(self, X):
        return -self.distances(X)
