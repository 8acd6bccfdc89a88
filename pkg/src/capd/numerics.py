"""Shared numerical kernels: metric-weighted ridge solve, PSD projection,
Gaussian KDE and soft-min smoothing.

All functions here are pure and reentrant.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import logsumexp

from .errors import SolverError, ValidationError

SYMMETRY_TOL = 1e-10
PINV_RCOND = 1e-12


def _as_finite_array(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def ridge_solve_metric(E, M, target, lam: float) -> np.ndarray:
    """Minimize (Ec - t)^T M (Ec - t) + (lam/2) ||c||^2 over c.

    Solves the normal equations (E^T M E + (lam/2) I) c = E^T M t with a
    Cholesky factorization, falling back to a pseudo-inverse for
    ill-conditioned but regularized systems.  Keeps the literal factor of
    one half on the regularizer.
    """
    E = _as_finite_array(E, "E")
    M = _as_finite_array(M, "M")
    t = _as_finite_array(target, "target")
    if E.ndim != 2 or M.shape != (E.shape[0], E.shape[0]) or t.shape != (E.shape[0],):
        raise ValidationError(
            f"shape mismatch: E {E.shape}, M {M.shape}, target {t.shape}"
        )
    if lam < 0:
        raise ValidationError("lambda must be nonnegative")

    A = E.T @ M @ E + (lam / 2.0) * np.eye(E.shape[1])
    b = E.T @ (M @ t)

    if lam == 0.0:
        # No regularization: refuse numerically singular systems.
        rank = np.linalg.matrix_rank(A, tol=None)
        if rank < A.shape[0]:
            raise SolverError(
                "normal equations singular at lambda = 0; use a positive lambda"
            )
    try:
        c = cho_solve(cho_factor(A), b)
    except np.linalg.LinAlgError:
        c = np.linalg.pinv(A, rcond=PINV_RCOND) @ b
    except Exception:
        c = np.linalg.pinv(A, rcond=PINV_RCOND) @ b

    residual = np.linalg.norm(A @ c - b)
    scale = max(np.linalg.norm(b), 1.0)
    if residual > 1e-8 * scale:
        if lam == 0.0:
            raise SolverError(
                "normal equations solve failed at lambda = 0; use a positive lambda"
            )
        raise SolverError(f"normal equations residual too large: {residual:g}")
    return c


def psd_project(a) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix: clip eigenvalues at 0."""
    a = _as_finite_array(a, "matrix")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL:
        raise ValidationError("matrix is not symmetric within 1e-10")
    sym = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(sym)
    clipped = np.clip(vals, 0.0, None)
    out = (vecs * clipped) @ vecs.T
    return 0.5 * (out + out.T)


def gaussian_kde(points, bandwidth: float, query) -> np.ndarray | float:
    """Kernel density estimate with a standard-normal kernel.

    f(q) = (1 / (n h)) * sum_i phi((q - p_i) / h)
    """
    pts = _as_finite_array(points, "points").ravel()
    if pts.size == 0:
        raise ValidationError("points must be nonempty")
    if bandwidth <= 0:
        raise ValidationError("bandwidth must be positive")
    q = np.asarray(query, dtype=np.float64)
    z = (q[..., None] - pts) / bandwidth
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    dens = phi.sum(axis=-1) / (pts.size * bandwidth)
    return float(dens) if np.ndim(query) == 0 else dens


def softmin(values, temperature: float) -> float:
    """Smooth minimum: -tau * log sum exp(-v_i / tau).

    Satisfies min(v) - tau*log(n) <= softmin(v) <= min(v).
    """
    v = _as_finite_array(values, "values").ravel()
    if v.size == 0:
        raise ValidationError("values must be nonempty")
    if temperature <= 0:
        raise ValidationError("temperature must be positive")
    return float(-temperature * logsumexp(-v / temperature))
