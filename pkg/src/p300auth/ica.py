"""Symmetric FastICA and frontal-correlation blink rejection."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


class RankDeficientError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class IcaModel:
    """Fitted decomposition.

    ``sources = unmixing @ (x - means)`` and ``x = mixing @ sources + means``.
    ``rotation`` holds the orthonormal unmixing rows in whitened space.
    """

    whitening: np.ndarray
    rotation: np.ndarray
    unmixing: np.ndarray
    mixing: np.ndarray
    component_means: np.ndarray
    n_components: int
    converged: bool
    iterations: int

    def sources(self, signal: np.ndarray) -> np.ndarray:
        return self.unmixing @ (np.asarray(signal, float) - self.component_means[:, None])


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    s, u = np.linalg.eigh(w @ w.T)
    return (u * (1.0 / np.sqrt(s))) @ u.T @ w


def whiten(signal: np.ndarray, n_components: int, rank_tol: float = 1e-10):
    """Return ``(means, whitening, whitened)`` from a PCA of the centered signal."""
    x = np.asarray(signal, dtype=float)
    means = x.mean(axis=1)
    xc = x - means[:, None]
    cov = xc @ xc.T / xc.shape[1]
    d, e = np.linalg.eigh(cov)
    if d[0] <= rank_tol * max(d[-1], np.finfo(float).tiny):
        bad = int(np.argmax(np.abs(e[:, 0])))
        raise RankDeficientError(
            f"channel covariance is rank deficient (eigenvalue ratio {d[0] / max(d[-1], 1e-300):.2e}); "
            f"remove a redundant channel such as index {bad}")
    order = np.argsort(d)[::-1][:n_components]
    k = (e[:, order] / np.sqrt(d[order])).T
    return means, k, k @ xc


def fastica_fit(signal, n_components: int | None = None, seed: int = 0, tol: float = 1e-4,
                max_iter: int = 200) -> IcaModel:
    """Parallel FastICA with the log-cosh (tanh) contrast.

    Parameters
    ----------
    signal : ndarray, shape (n_channels, n_samples)
    n_components : int, optional
        Defaults to the channel count.
    seed : int
        Seeds the random initial rotation.
    """
    x = np.asarray(signal, dtype=float)
    n_ch, n = x.shape
    k = n_ch if n_components is None else n_components
    if not 1 <= k <= n_ch:
        raise ValueError(f"n_components must be in [1, {n_ch}]")
    if n < 10 * n_ch:
        raise ValueError(f"need at least {10 * n_ch} samples, got {n}")
    means, kmat, z = whiten(x, k)

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((k, k)))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = np.tanh(w @ z)
        g_prime = (1.0 - g**2).mean(axis=1)
        w_new = _sym_decorrelate(g @ z.T / n - g_prime[:, None] * w)
        lim = np.max(np.abs(np.abs(np.einsum("ij,ij->i", w_new, w)) - 1.0))
        w = w_new
        if lim < tol:
            converged = True
            break
    if not converged:
        logger.info("FastICA did not converge in %d iterations", max_iter)

    unmixing = w @ kmat
    mixing = np.linalg.pinv(unmixing)
    return IcaModel(kmat, w, unmixing, mixing, means, k, converged, it)


def detect_artifact_components(model: IcaModel, signal, threshold: float = 0.7,
                               frontal: tuple[int, ...] = (0, 1)) -> list[int]:
    """Components whose |correlation| with the mean frontal channel exceeds ``threshold``.

    Ordered by correlation, strongest first.
    """
    x = np.asarray(signal, dtype=float)
    ref = x[list(frontal)].mean(axis=0)
    src = model.sources(x)
    ref = ref - ref.mean()
    src = src - src.mean(axis=1, keepdims=True)
    denom = np.linalg.norm(src, axis=1) * np.linalg.norm(ref)
    corr = np.abs(src @ ref) / np.where(denom > 0, denom, np.inf)
    hits = [int(i) for i in np.flatnonzero(corr > threshold)]
    return sorted(hits, key=lambda i: -corr[i])


def remove_components(model: IcaModel, signal, indices) -> np.ndarray:
    """Zero the given sources and project back to channel space."""
    idx = np.asarray(list(indices), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= model.n_components):
        raise IndexError(f"component index out of range [0, {model.n_components})")
    src = model.sources(signal)
    src[idx] = 0.0
    return model.mixing @ src + model.component_means[:, None]


def clean_blinks(signal, seed: int = 0, threshold: float = 0.7, tol: float = 1e-4,
                 max_iter: int = 200):
    """Fit, flag and remove in one step; returns ``(cleaned, model, flagged)``."""
    model = fastica_fit(signal, seed=seed, tol=tol, max_iter=max_iter)
    flagged = detect_artifact_components(model, signal, threshold)
    return remove_components(model, signal, flagged), model, flagged
