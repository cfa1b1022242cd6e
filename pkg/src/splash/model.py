"""Structural spatio-temporal VAR ``y_t = A y_t + B y_{t-1} + eps_t``.

Holds the structural triple, checks of the stability conditions, the
reduced form ``y_t = C y_{t-1} + D eps_t`` and population autocovariances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import ConvergenceError


@dataclass(frozen=True)
class StModel:
    """Structural model ``(A, B, Sigma_eps)`` with bandwidth metadata.

    ``bandwidth_k`` bounds the nonzero band of ``A`` and ``B``;
    ``bandwidth_l0`` bounds the band of ``sigma_eps``.
    """

    a: np.ndarray
    b: np.ndarray
    sigma_eps: np.ndarray
    bandwidth_k: int
    bandwidth_l0: int = 0

    def __post_init__(self):
        a = linalg.as_matrix(self.a, "a")
        b = linalg.as_matrix(self.b, "b")
        s = linalg.as_matrix(self.sigma_eps, "sigma_eps")
        n = a.shape[0]
        if a.shape != (n, n) or b.shape != (n, n) or s.shape != (n, n):
            raise ValueError("a, b and sigma_eps must all be square of the same size")
        if np.any(np.diag(a) != 0):
            raise ValueError("diagonal of A must be zero")
        i, j = np.indices((n, n))
        off = np.abs(i - j) > self.bandwidth_k
        if np.any(a[off] != 0) or np.any(b[off] != 0):
            raise ValueError(f"A or B has entries outside bandwidth {self.bandwidth_k}")
        if not np.allclose(s, s.T, rtol=0, atol=1e-12):
            raise ValueError("sigma_eps must be symmetric")
        if np.any(s[np.abs(i - j) > self.bandwidth_l0] != 0):
            raise ValueError(f"sigma_eps has entries outside bandwidth {self.bandwidth_l0}")
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError as exc:
            raise ValueError("sigma_eps must be positive definite") from exc
        # Freeze private copies.
        for name, arr in (("a", a), ("b", b), ("sigma_eps", s)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class ReducedForm:
    c: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of :func:`check_stability`; never raises on failure."""

    delta_a: float
    norm_a: float
    norm_b: float
    a_bounded: bool
    b_bounded: bool
    spectral_norm_c: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.a_bounded and self.b_bounded


def check_stability(m: StModel, delta_a: float) -> StabilityReport:
    """Check both stability clauses with ``C_B`` taken as ``||B||_{1 v inf}``.

    Clause (a): ``||A||_{1 v inf} <= delta_a``. Clause (b):
    ``||B||_{1 v inf} / (1 - delta_a) < 1``. The spectral norm of the
    reduced-form ``C`` is reported alongside (NaN if ``I - A`` is singular).
    """
    if not 0 < delta_a < 1:
        raise ValueError("delta_a must lie in (0, 1)")
    na = linalg.norm_one_inf(m.a)
    nb = linalg.norm_one_inf(m.b)
    a_ok = na <= delta_a
    b_ok = nb / (1.0 - delta_a) < 1.0
    try:
        snc = linalg.spectral_norm(reduced_form(m).c)
    except np.linalg.LinAlgError:
        snc = float("nan")
    return StabilityReport(
        delta_a=delta_a,
        norm_a=na,
        norm_b=nb,
        a_bounded=a_ok,
        b_bounded=b_ok,
        spectral_norm_c=snc,
        checks={"a": a_ok, "b": b_ok},
    )


def reduced_form(m: StModel) -> ReducedForm:
    """``C = (I - A)^{-1} B`` and ``D = (I - A)^{-1}``."""
    n = m.n
    ima = np.eye(n) - m.a
    d = linalg.solve_linear(ima, np.eye(n))
    c = linalg.solve_linear(ima, m.b)
    if n and np.abs(ima @ c - m.b).max() > 1e-10 * max(1.0, np.abs(m.b).max()):
        raise np.linalg.LinAlgError("reduced form residual check failed")
    return ReducedForm(c=c, d=d)


def population_autocov(rf: ReducedForm, sigma_eps, lag: int = 0, tol: float = 1e-12,
                       max_iter: int = 100_000) -> np.ndarray:
    """Population autocovariance ``E[y_t y_{t-lag}']`` of the reduced form.

    Lag 0 is the fixed point of ``S <- C S C' + D Sigma_eps D'``, iterated
    until the max-norm change is at most ``tol``; lag ``j`` is ``C^j S``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if lag < 0:
        raise ValueError("lag must be non-negative")
    c = linalg.as_matrix(rf.c, "c")
    d = linalg.as_matrix(rf.d, "d")
    q = d @ linalg.as_matrix(sigma_eps, "sigma_eps") @ d.T
    q = 0.5 * (q + q.T)
    s = q.copy()
    for _ in range(max_iter):
        new = c @ s @ c.T + q
        new = 0.5 * (new + new.T)
        delta = np.abs(new - s).max()
        s = new
        if delta <= tol:
            break
        if not np.isfinite(delta):
            raise ConvergenceError("Lyapunov iteration diverged", last=s, residual=delta)
    else:
        raise ConvergenceError(
            "Lyapunov iteration did not converge; is the spectral radius of C below 1?",
            last=s,
            residual=delta,
        )
    return np.linalg.matrix_power(c, lag) @ s if lag else s
