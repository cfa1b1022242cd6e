"""Comparison estimators: unpenalized Yule-Walker (GMWY), L1-penalized VAR, window mean.

GMWY works on *unbanded* sample autocovariances, whereas SPLASH bands
them. The asymmetry is deliberate and mirrors the original comparison.
"""

from __future__ import annotations

import logging
from typing import NamedTuple

import numpy as np

from . import _kernels, linalg
from .autocov import AcovPair, banded_autocov
from .exceptions import ConvergenceError
from .model import StModel

logger = logging.getLogger(__name__)


class SupportSet(frozenset):
    """Set of admissible coefficients ``(matrix, i, j)`` with ``matrix`` in {"A", "B"}."""

    def __new__(cls, entries=()):
        entries = frozenset((str(m), int(i), int(j)) for m, i, j in entries)
        for m, i, j in entries:
            if m not in ("A", "B"):
                raise ValueError(f"unknown matrix {m!r}")
            if m == "A" and i == j:
                raise ValueError("diagonal of A is not estimable")
            if i < 0 or j < 0:
                raise ValueError("indices must be non-negative")
        return super().__new__(cls, entries)

    def for_equation(self, i: int) -> list:
        """Entries of row ``i``: A columns first, then B, each by ``j`` ascending."""
        row = [e for e in self if e[1] == i]
        return sorted(row, key=lambda e: (e[0], e[2]))


def band_support(n: int, k: int) -> SupportSet:
    """Every ``A``/``B`` entry with ``|i - j| <= k`` (no diagonal for ``A``)."""
    out = []
    for i in range(n):
        for j in range(max(0, i - k), min(n, i + k + 1)):
            if j != i:
                out.append(("A", i, j))
            out.append(("B", i, j))
    return SupportSet(out)


def model_support(model: StModel) -> SupportSet:
    """Nonzero entries of the true ``A`` and ``B``."""
    out = [("A", int(i), int(j)) for i, j in zip(*np.nonzero(model.a))]
    out += [("B", int(i), int(j)) for i, j in zip(*np.nonzero(model.b))]
    return SupportSet(out)


class GmwyFit(NamedTuple):
    a_hat: np.ndarray
    b_hat: np.ndarray
    rank_deficient: tuple


def gmwy_from_autocov(acov: AcovPair, support: SupportSet) -> GmwyFit:
    """Equation-by-equation least squares of ``sigma_i`` on the supported columns of ``[S1' S0]``.

    Rank-deficient equations get the minimum-norm solution and are listed
    in ``rank_deficient``.
    """
    s0 = np.asarray(acov.sigma0, dtype=float)
    s1 = np.asarray(acov.sigma1, dtype=float)
    n = s0.shape[0]
    v = np.hstack([s1.T, s0])
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    deficient = []
    for i in range(n):
        entries = support.for_equation(i)
        if not entries:
            continue
        if len(entries) > n:
            raise ValueError(f"equation {i} has {len(entries)} supported columns, more than N = {n}")
        if any(j >= n for _, _, j in entries):
            raise ValueError("support refers to a unit outside the panel")
        cols = [j if m == "A" else n + j for m, _, j in entries]
        vi = v[:, cols]
        coef, _, rank, _ = np.linalg.lstsq(vi, s1[i], rcond=None)
        if rank < len(cols):
            deficient.append(i)
        for (m, _, j), val in zip(entries, coef):
            (a if m == "A" else b)[i, j] = val
    if deficient:
        logger.debug("GMWY normal equations rank deficient for equations %s", deficient)
    return GmwyFit(a, b, tuple(deficient))


def gmwy_fit(p, support: SupportSet) -> GmwyFit:
    """GMWY estimate from a panel using unbanded sample autocovariances."""
    y = p.values if hasattr(p, "values") else np.asarray(p, dtype=float)
    if y.size == 0:
        raise ValueError("empty panel")
    return gmwy_from_autocov(banded_autocov(y, None), support)


def _pvar_design(y: np.ndarray):
    x = y[:, :-1]
    resp = y[:, 1:]
    return x @ x.T, resp @ x.T  # gram (N x N), row i of xty is X'y_i


def pvar_lambda_max(p) -> float:
    """Smallest ``lam`` at which every row of the penalized VAR is zero."""
    y = p.values if hasattr(p, "values") else np.asarray(p, dtype=float)
    _, xty = _pvar_design(y)
    return float(2.0 * np.abs(xty).max()) if xty.size else 0.0


def pvar_fit(p, lam: float, tol: float = 1e-8, max_iter: int = 100_000, warm_start=None) -> np.ndarray:
    """L1-penalized least squares of ``y_t`` on ``y_{t-1}``.

    Minimizes ``sum_t ||y_t - C y_{t-1}||^2 + lam * sum |c_ij|`` row by row
    with cyclic coordinate descent. Each row stops once its KKT residual,
    relative to ``max(1, 2 max|X'y_i|)``, is at most ``tol``.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    y = p.values if hasattr(p, "values") else np.asarray(p, dtype=float)
    y = linalg.as_matrix(y, "panel")
    if y.shape[1] < 2:
        raise ValueError("need at least two time points")
    gram, xty = _pvar_design(y)
    n = y.shape[0]
    c = np.zeros((n, n)) if warm_start is None else np.array(warm_start, dtype=float)
    for i in range(n):
        row = np.ascontiguousarray(c[i])
        sweeps, kkt = _kernels.lasso_cd(gram, np.ascontiguousarray(xty[i]), float(lam), row, tol, max_iter)
        if sweeps < 0:
            raise ConvergenceError(f"PVAR row {i} did not converge", last=c, residual=kkt)
        c[i] = row
    return c


def pvar_objective(p, c, lam: float) -> float:
    y = p.values if hasattr(p, "values") else np.asarray(p, dtype=float)
    r = y[:, 1:] - c @ y[:, :-1]
    return float((r * r).sum() + lam * np.abs(c).sum())


def const_forecast(p) -> np.ndarray:
    """Per-unit time mean of the window."""
    y = p.values if hasattr(p, "values") else np.asarray(p, dtype=float)
    if y.ndim != 2 or y.shape[1] == 0:
        raise ValueError("need a 2-D panel with at least one observation")
    return y.mean(axis=1)


def transition_matrix(a_hat, b_hat) -> np.ndarray:
    """Reduced-form ``(I - A)^{-1} B``."""
    a_hat = linalg.as_matrix(a_hat, "a_hat")
    return linalg.solve_linear(np.eye(a_hat.shape[0]) - a_hat, linalg.as_matrix(b_hat, "b_hat"))


def forecast_one_step(a_hat, b_hat, y_last) -> np.ndarray:
    """``(I - A)^{-1} B y_last``."""
    return transition_matrix(a_hat, b_hat) @ np.asarray(y_last, dtype=float)
