"""Pipeline transforms: Vectorizer, StandardScaler, Xdawn, ERPCovariance, TangentSpace.

Each follows the ``fit(X, y) -> self`` / ``transform(X)`` protocol and is
fitted on training data only.
"""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.linalg import eigh

from .spd import check_spd, exp_map, log_map, oas_batch, riemannian_mean

logger = logging.getLogger(__name__)


class NotFittedError(RuntimeError):
    pass


class ModeError(ValueError):
    """A transform received flat vectors where it needs an epoch tensor."""


def _require_epochs(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 3:
        raise ModeError(f"{name} needs a 3-D (n_epochs, n_channels, n_times) array, "
                        f"got {X.ndim}-D input")
    return X


class Vectorizer:
    """Channel-major flattening: all samples of channel 0, then channel 1, ..."""

    def fit(self, X, y=None):
        X = np.asarray(X)
        self.input_shape_ = X.shape[1:]
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if not hasattr(self, "input_shape_"):
            raise NotFittedError("Vectorizer is not fitted")
        if X.shape[1:] != self.input_shape_:
            raise ValueError(f"expected samples of shape {self.input_shape_}, got {X.shape[1:]}")
        return X.reshape(len(X), -1)

    def inverse_transform(self, X):
        return np.asarray(X).reshape((len(X),) + tuple(self.input_shape_))


class StandardScaler:
    """Per-feature ``(x - mean) / std`` with training statistics.

    Zero-variance training features map to 0 for every input.
    """

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("StandardScaler expects 2-D input")
        self.mean_ = X.mean(axis=0)
        self.scale_ = X.std(axis=0)
        return self

    def transform(self, X):
        if not hasattr(self, "mean_"):
            raise NotFittedError("StandardScaler is not fitted")
        X = np.asarray(X, dtype=float)
        const = self.scale_ == 0
        out = (X - self.mean_) / np.where(const, 1.0, self.scale_)
        out[:, const] = 0.0
        return out


def _scm(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=-1, keepdims=True)
    return xc @ xc.T / x.shape[-1]


class Xdawn:
    """Spatial filters enhancing the evoked response of the target class.

    Parameters
    ----------
    nfilter : int
        Number of filters kept.
    target : int
        The single class whose prototype defines the filters.
    """

    def __init__(self, nfilter: int = 2, target: int = 1):
        self.nfilter = nfilter
        self.target = target

    def fit(self, X, y):
        X = _require_epochs(X, "Xdawn")
        y = np.asarray(y)
        if not np.any(y == self.target) or np.all(y == self.target):
            raise ValueError("Xdawn fit needs both the target class and at least one other class")
        n, n_ch, n_t = X.shape
        signal_cov = _scm(X.transpose(1, 0, 2).reshape(n_ch, n * n_t))
        proto = X[y == self.target].mean(axis=0)
        proto_cov = _scm(proto)
        try:
            np.linalg.cholesky(signal_cov)
        except np.linalg.LinAlgError:
            eps = 1e-8 * np.trace(signal_cov) / n_ch
            warnings.warn(f"singular signal covariance; adding ridge {eps:.3e}", RuntimeWarning)
            signal_cov = signal_cov + eps * np.eye(n_ch)
        evals, evecs = eigh(proto_cov, signal_cov)
        order = np.argsort(evals)[::-1]
        evecs = evecs[:, order]
        evecs /= np.linalg.norm(evecs, axis=0)
        self.filters_ = evecs[:, :self.nfilter].T
        self.evoked_ = self.filters_ @ proto
        return self

    def transform(self, X):
        X = _require_epochs(X, "Xdawn")
        if not hasattr(self, "filters_"):
            raise NotFittedError("Xdawn is not fitted")
        return np.einsum("fc,nct->nft", self.filters_, X)


class ERPCovariance:
    """OAS covariance of the super-trial ``[prototype; epoch]``.

    The prototype is the mean training epoch of the target class, so each
    output is 2C x 2C.
    """

    def __init__(self, target: int = 1, estimator: str = "oas"):
        if estimator != "oas":
            raise ValueError("only the 'oas' estimator is supported")
        self.target = target
        self.estimator = estimator

    def fit(self, X, y):
        X = _require_epochs(X, "ERPCovariance")
        y = np.asarray(y)
        if not np.any(y == self.target):
            raise ValueError("ERPCovariance fit needs epochs of the target class")
        self.prototype_ = X[y == self.target].mean(axis=0)
        return self

    def transform(self, X):
        X = _require_epochs(X, "ERPCovariance")
        if not hasattr(self, "prototype_"):
            raise NotFittedError("ERPCovariance is not fitted")
        out = np.empty((len(X), 2 * X.shape[1], 2 * X.shape[1]))
        for lo in range(0, len(X), 512):
            chunk = X[lo:lo + 512]
            proto = np.broadcast_to(self.prototype_, chunk.shape)
            out[lo:lo + 512] = oas_batch(np.concatenate([proto, chunk], axis=1))
        return out


class TangentSpace:
    """Log-map at the Riemannian mean of the training matrices."""

    def __init__(self, tol: float = 1e-8, max_iter: int = 50):
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y=None):
        X = check_spd(X)
        self.reference_ = riemannian_mean(X, tol=self.tol, max_iter=self.max_iter)
        return self

    def transform(self, X):
        if not hasattr(self, "reference_"):
            raise NotFittedError("TangentSpace is not fitted")
        return log_map(check_spd(X), self.reference_)

    def inverse_transform(self, V):
        return exp_map(V, self.reference_)
