"""Dense matrix primitives: induced norms, banding, spectral norm, linear solves."""

from __future__ import annotations

import numpy as np
from scipy import linalg as sla

from .exceptions import ConvergenceError, IllConditionedError

MAX_CONDITION = 1e12


def as_matrix(m, name="matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D float array, raising on anything else."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def _nonempty(m, name="matrix") -> np.ndarray:
    arr = as_matrix(m, name)
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return arr


def norm_one(m) -> float:
    """Maximum absolute column sum."""
    arr = _nonempty(m)
    return float(np.abs(arr).sum(axis=0).max())


def norm_inf(m) -> float:
    """Maximum absolute row sum."""
    arr = _nonempty(m)
    return float(np.abs(arr).sum(axis=1).max())


def norm_one_inf(m) -> float:
    """``max(norm_one(m), norm_inf(m))``."""
    return max(norm_one(m), norm_inf(m))


def norm_max(m) -> float:
    arr = _nonempty(m)
    return float(np.abs(arr).max())


def spectral_norm(m, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value of ``m`` by power iteration on ``m'm``.

    The start vector is the normalized all-ones vector (plus a fixed small
    perturbation), so the result is reproducible. Each step applies the
    current operator to the iterate and then squares the operator, so step
    ``k`` works with ``(m'm)^(2^k)`` up to scaling. Plain power iteration
    stalls when the top singular values are nearly tied (common for grid
    structured matrices), and a small change of the Rayleigh quotient does
    not tell a settled iterate from a stalled one. The powered operator does:
    once squaring it no longer moves it (max-entry drift <= ``tol`` after
    rescaling), every eigenvalue ratio raised to ``2^k`` is either negligible
    or indistinguishable from one. Iteration stops when that holds and the
    Rayleigh quotient of ``m'm`` changed by at most ``tol`` (relative).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    arr = _nonempty(m)
    gram = arr.T @ arr
    n = gram.shape[0]
    if not np.any(gram):
        return 0.0
    v = np.ones(n) / np.sqrt(n)
    # Cheap deterministic nudge so the start vector is never exactly
    # orthogonal to the top eigenvector (e.g. symmetric sign patterns).
    v = v + 1e-3 * np.cos(np.arange(1, n + 1))
    v /= np.linalg.norm(v)
    op = gram / np.abs(gram).max()
    est = float(v @ gram @ v)
    new = est
    change = np.inf
    for it in range(max_iter):
        w = op @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        new = float(v @ gram @ v)
        change = abs(new - est)
        est = new
        if it < _MAX_SQUARINGS:
            nxt = op @ op
            nxt /= np.abs(nxt).max()
            drift = float(np.abs(nxt - op).max())
            op = nxt
        else:
            drift = 0.0
        if drift <= tol and change <= tol * max(new, 1e-300):
            return float(np.sqrt(max(new, 0.0)))
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} steps",
        last=float(np.sqrt(max(new, 0.0))),
        residual=change,
    )


# beyond 2^60 the powered operator is numerically a projector onto the top
# eigenspace; further squaring would only add rounding
_MAX_SQUARINGS = 60


def band(m, h: int) -> np.ndarray:
    """Zero every entry with ``|i - j| > h``; shape is preserved."""
    if h < 0:
        raise ValueError("bandwidth h must be non-negative")
    arr = as_matrix(m)
    i, j = np.indices(arr.shape)
    return np.where(np.abs(i - j) <= h, arr, 0.0)


def solve_linear(a, b) -> np.ndarray:
    """Solve ``a x = b`` by LU with partial pivoting.

    Raises :class:`IllConditionedError` when the 1-norm condition estimate
    exceeds 1e12 (or the matrix is exactly singular).
    """
    a = as_matrix(a, "a")
    b_arr = np.asarray(b, dtype=float)
    vector = b_arr.ndim == 1
    b2 = b_arr.reshape(-1, 1) if vector else as_matrix(b_arr, "b")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"a must be square, got {a.shape}")
    if b2.shape[0] != a.shape[0]:
        raise ValueError("a and b have incompatible shapes")
    if not np.all(np.isfinite(b2)):
        raise ValueError("b contains NaN or Inf")
    anorm = np.abs(a).sum(axis=0).max() if a.size else 0.0
    lu, piv, info = sla.lapack.dgetrf(a)
    if info > 0 or anorm == 0.0:
        raise IllConditionedError("matrix is singular", condition=float("inf"))
    rcond, _ = sla.lapack.dgecon(lu, anorm, norm="1")
    cond = float("inf") if rcond == 0 else 1.0 / rcond
    if cond > MAX_CONDITION:
        raise IllConditionedError(
            f"matrix is ill-conditioned (1-norm condition ~ {cond:.3e})", condition=cond
        )
    x, info = sla.lapack.dgetrs(lu, piv, b2)
    return x.ravel() if vector else x
