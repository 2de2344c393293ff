"""Affine-invariant geometry of symmetric positive-definite matrices.

All functions accept a single matrix or a stack ``(..., n, n)``.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import eigvalsh


class NotSPDError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


def check_spd(c, sym_tol: float = 1e-9) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim < 2 or c.shape[-1] != c.shape[-2]:
        raise NotSPDError(f"expected square matrices, got shape {c.shape}")
    scale = np.maximum(np.abs(c).max(axis=(-2, -1)), 1.0)
    if np.any(np.abs(c - np.swapaxes(c, -1, -2)).max(axis=(-2, -1)) > sym_tol * scale):
        raise NotSPDError("matrix is not symmetric")
    if np.any(np.linalg.eigvalsh(c)[..., 0] <= 0):
        raise NotSPDError("matrix is not positive definite")
    return c


def _apply(c, fn) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    w, v = np.linalg.eigh(c)
    return (v * fn(w)[..., None, :]) @ np.swapaxes(v, -1, -2)


def spd_log(c) -> np.ndarray:
    return _apply(c, np.log)


def spd_exp(c) -> np.ndarray:
    """Matrix exponential of a symmetric matrix."""
    return _apply(c, np.exp)


def spd_sqrt(c) -> np.ndarray:
    return _apply(c, np.sqrt)


def spd_invsqrt(c) -> np.ndarray:
    return _apply(c, lambda w: 1.0 / np.sqrt(w))


def spd_power(c, p: float) -> np.ndarray:
    return _apply(c, lambda w: w**p)


def riemannian_distance(a, b) -> float | np.ndarray:
    """``||log(A^-1/2 B A^-1/2)||_F`` through the generalized eigenvalues of (B, A)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 2 and b.ndim == 2:
        return float(np.sqrt(np.sum(np.log(eigvalsh(b, a)) ** 2)))
    isq = spd_invsqrt(a)
    w = np.linalg.eigvalsh(isq @ b @ isq)
    return np.sqrt(np.sum(np.log(w) ** 2, axis=-1))


def _whitened_logs(f, c) -> np.ndarray:
    fi = np.linalg.inv(f)
    w = fi @ c @ fi.T
    return spd_log((w + np.swapaxes(w, -1, -2)) / 2)


def riemannian_mean(covs, tol: float = 1e-8, max_iter: int = 50,
                    init: np.ndarray | None = None) -> np.ndarray:
    """Karcher mean by Barzilai-Borwein gradient descent.

    The iterate is held as a factor ``F`` with ``G = F F^T`` and moved by
    ``F <- F expm(s T / 2)``, where ``T`` is the mean of the logarithms of
    ``F^-1 C F^-T``.  That update follows the geodesic from ``G`` and
    parallel-transports the frame, so tangents of successive iterates are
    directly comparable and give the Barzilai-Borwein step
    ``s <T, T> / <T, T - T'>``, clipped to ``[1e-3, 1]``.  A step that does
    not shrink ``||T||_F`` is halved and retried.

    With ``s = 1`` this is the classic fixed-point iteration, which stalls
    or oscillates on widely spread sets; the adaptive step avoids both.

    Parameters
    ----------
    covs : ndarray, shape (n_matrices, n, n)
    tol : float
        Stop once ``||T||_F < tol``.
    max_iter : int
        Trial steps allowed, rejected ones included.
    init : ndarray, shape (n, n), optional
        Starting point; the arithmetic mean by default.

    Raises
    ------
    ConvergenceError
        After ``max_iter`` trial steps, carrying the last ``||T||_F``.
    """
    c = np.asarray(covs, dtype=float)
    if c.ndim == 2:
        c = c[None]
    f = np.linalg.cholesky(c.mean(axis=0) if init is None else np.asarray(init, dtype=float))
    t = _whitened_logs(f, c).mean(axis=0)
    resid = float(np.linalg.norm(t))
    step = 1.0
    for _ in range(max_iter):
        if resid < tol:
            break
        f_new = f @ spd_exp(step * t / 2)
        t_new = _whitened_logs(f_new, c).mean(axis=0)
        r_new = float(np.linalg.norm(t_new))
        if r_new >= resid:
            step /= 2.0
            continue
        curv = float(np.sum(t * (t - t_new)))
        bb = step * resid**2 / curv if curv > 0 else 1.0
        f, t, resid = f_new, t_new, r_new
        step = float(np.clip(bb, 1e-3, 1.0))
    if resid < tol:
        return f @ f.T
    raise ConvergenceError(f"riemannian_mean did not converge in {max_iter} iterations", resid)


def upper_weights(n: int) -> np.ndarray:
    """Coefficients giving an isometric upper-triangular vectorization."""
    iu = np.triu_indices(n)
    return np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))


def log_map(c, ref) -> np.ndarray:
    """Tangent vector(s) of ``c`` at ``ref``, length n(n+1)/2."""
    isq = spd_invsqrt(ref)
    m = spd_log(isq @ np.asarray(c, dtype=float) @ isq)
    n = m.shape[-1]
    iu = np.triu_indices(n)
    return m[..., iu[0], iu[1]] * upper_weights(n)


def exp_map(v, ref) -> np.ndarray:
    """Inverse of :func:`log_map`."""
    v = np.asarray(v, dtype=float)
    ref = np.asarray(ref, dtype=float)
    n = ref.shape[-1]
    iu = np.triu_indices(n)
    m = np.zeros(v.shape[:-1] + (n, n))
    m[..., iu[0], iu[1]] = v / upper_weights(n)
    m = m + np.swapaxes(np.triu(m, 1), -1, -2)
    sq = spd_sqrt(ref)
    return sq @ spd_exp(m) @ sq


def oas(x, assume_centered: bool = False) -> tuple[np.ndarray, float]:
    """Oracle Approximating Shrinkage covariance of rows-as-variables data.

    Parameters
    ----------
    x : ndarray, shape (n_features, n_samples)

    Returns
    -------
    cov : ndarray, shape (n_features, n_features)
    shrinkage : float
        Clamped to [0, 1].
    """
    x = np.asarray(x, dtype=float)
    p, n = x.shape
    if not assume_centered:
        x = x - x.mean(axis=1, keepdims=True)
    s = x @ x.T / n
    mu = np.trace(s) / p
    alpha = np.mean(s**2)
    num = alpha + mu**2
    den = (n + 1.0) * (alpha - mu**2 / p)
    shrink = 1.0 if den == 0 else min(num / den, 1.0)
    return (1.0 - shrink) * s + shrink * mu * np.eye(p), float(shrink)


def oas_batch(x) -> np.ndarray:
    """OAS for a stack (m, n_features, n_samples); returns (m, p, p)."""
    x = np.asarray(x, dtype=float)
    m, p, n = x.shape
    x = x - x.mean(axis=2, keepdims=True)
    s = x @ np.swapaxes(x, 1, 2) / n
    mu = np.trace(s, axis1=1, axis2=2) / p
    alpha = np.mean(s**2, axis=(1, 2))
    num = alpha + mu**2
    den = (n + 1.0) * (alpha - mu**2 / p)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(den == 0, 1.0, np.minimum(num / den, 1.0))
    return (1.0 - shrink)[:, None, None] * s + (shrink * mu)[:, None, None] * np.eye(p)


def ledoit_wolf(x, assume_centered: bool = False) -> tuple[np.ndarray, float]:
    """Ledoit-Wolf shrunk covariance of samples-as-rows data ``(n, p)``."""
    x = np.asarray(x, dtype=float)
    n, p = x.shape
    if not assume_centered:
        x = x - x.mean(axis=0)
    s = x.T @ x / n
    mu = np.trace(s) / p
    delta = np.sum(s**2) - 2 * mu * np.trace(s) + p * mu**2  # ||S - mu I||_F^2
    row_sq = np.einsum("ij,ij->i", x, x)
    beta = (np.sum(row_sq**2) / n - np.sum(s**2)) / n
    beta = min(beta, delta)
    shrink = 0.0 if delta == 0 else beta / delta
    return (1.0 - shrink) * s + shrink * mu * np.eye(p), float(shrink)
