"""Estimator handles with a common interface for tuning and forecasting.

Each estimator offers

* ``candidates(y, grid)``: one fitted model per hyperparameter pair on the
  training data ``y`` (``N x T``), used by cross-validation;
* ``fit(y, choice, grid)``: the model refitted on ``y`` at a chosen pair.

A fitted model forecasts one step ahead with ``predict(y_last)``.

Penalty levels are carried between a training slice and the full window
by their position on the log-spaced path, since ``lambda_max`` differs
between the two data sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import benchmarks, solver
from .autocov import banded_autocov, select_bandwidth
from .benchmarks import SupportSet
from .simulate import RngSpec
from .yule_walker import assemble_system, build_layout


@dataclass
class CvGrid:
    """Hyperparameter grid.

    ``lambdas=None`` means: for each ``alpha`` use ``n_lambda`` log-spaced
    values from that alpha's ``lambda_max`` down to ``ratio * lambda_max``.
    """

    lambdas: Optional[list] = None
    alphas: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    train_frac: float = 0.8
    n_lambda: int = 20
    ratio: float = 1e-4

    def __post_init__(self):
        if not 0 < self.train_frac < 1:
            raise ValueError("train_frac must lie in (0, 1)")
        if self.lambdas is not None:
            lams = [float(x) for x in self.lambdas]
            if not lams or any(b > a for a, b in zip(lams, lams[1:])):
                raise ValueError("lambdas must be nonempty and descending")
            self.lambdas = lams
        if not self.alphas or any(not 0 <= a <= 1 for a in self.alphas):
            raise ValueError("alphas must be nonempty values in [0, 1]")

    def path(self, lmax: float) -> np.ndarray:
        if self.lambdas is not None:
            return np.array(self.lambdas)
        return solver.lambda_path(lmax, self.n_lambda, self.ratio)


@dataclass
class Fitted:
    """A one-step forecaster: ``y_{t+1} = transition @ y_t + offset``."""

    transition: np.ndarray
    offset: Optional[np.ndarray] = None
    lam: Optional[float] = None
    alpha: Optional[float] = None
    lam_index: Optional[int] = None
    a_hat: Optional[np.ndarray] = None
    b_hat: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    def predict(self, y_last) -> np.ndarray:
        out = self.transition @ np.asarray(y_last, dtype=float)
        return out if self.offset is None else out + self.offset


@dataclass(frozen=True)
class CvChoice:
    lam: Optional[float] = None
    alpha: Optional[float] = None
    lam_index: Optional[int] = None
    score: float = float("nan")


def _structural(a, b, **kw) -> Fitted:
    try:
        c = benchmarks.transition_matrix(a, b)
    except np.linalg.LinAlgError as exc:
        kw.setdefault("info", {})["error"] = str(exc)
        c = np.full(a.shape, np.nan)
    return Fitted(transition=c, a_hat=a, b_hat=b, **kw)


class SplashEstimator:
    """SPLASH(alpha, lambda) on banded sample autocovariances.

    ``alpha=None`` tunes alpha over the grid; a number fixes it.
    ``bandwidth`` is an integer, ``None`` (no banding) or ``"bootstrap"``
    for :func:`~splash.autocov.select_bandwidth` over ``0..N-1``.
    """

    tuned = True

    def __init__(self, alpha: Optional[float] = None, bandwidth: Union[int, str, None] = "bootstrap",
                 cap: Optional[int] = None, tol: float = solver.DEFAULT_TOL,
                 rng: RngSpec = RngSpec(0), n_boot: int = 50, label: Optional[str] = None):
        self.alpha = alpha
        self.bandwidth = bandwidth
        self.cap = cap
        self.tol = tol
        self.rng = rng
        self.n_boot = n_boot
        self.label = label or ("SPLASH(alpha,lambda)" if alpha is None else f"SPLASH({alpha:g},lambda)")

    def _alphas(self, grid: CvGrid):
        return list(grid.alphas) if self.alpha is None else [float(self.alpha)]

    def system(self, y):
        n = y.shape[0]
        if self.bandwidth == "bootstrap":
            h = select_bandwidth(y, range(n), n_boot=self.n_boot, rng=self.rng)
        else:
            h = self.bandwidth
        layout = build_layout(n, self.cap)
        return assemble_system(banded_autocov(y, h), layout), h

    def candidates(self, y, grid: CvGrid) -> list:
        sys, h = self.system(y)
        out = []
        for alpha in self._alphas(grid):
            lams = grid.path(solver.lambda_max(sys, alpha))
            for k, f in enumerate(solver.fit_path(sys, alpha, lams, tol=self.tol)):
                out.append(_structural(f.a_hat, f.b_hat, lam=f.lam, alpha=alpha, lam_index=k,
                                       info={"bandwidth": h}))
        return out

    def fit(self, y, choice: CvChoice, grid: CvGrid) -> Fitted:
        sys, h = self.system(y)
        alpha = float(choice.alpha if choice.alpha is not None else self._alphas(grid)[0])
        lams = grid.path(solver.lambda_max(sys, alpha))
        if grid.lambdas is None and choice.lam_index is not None:
            lams = lams[:choice.lam_index + 1]
        else:
            lams = [x for x in lams if x > choice.lam] + [choice.lam]
        f = solver.fit_path(sys, alpha, lams, tol=self.tol)[-1]
        return _structural(f.a_hat, f.b_hat, lam=f.lam, alpha=alpha, lam_index=choice.lam_index,
                           info={"bandwidth": h, "fit": f})


class PvarEstimator:
    """L1-penalized reduced-form VAR(1); alpha is not used."""

    tuned = True

    def __init__(self, tol: float = 1e-8, label: str = "PVAR"):
        self.tol = tol
        self.label = label

    def _path(self, y, grid: CvGrid):
        return grid.path(benchmarks.pvar_lambda_max(y))

    def candidates(self, y, grid: CvGrid) -> list:
        out = []
        warm = None
        for k, lam in enumerate(self._path(y, grid)):
            warm = benchmarks.pvar_fit(y, lam, tol=self.tol, warm_start=warm)
            out.append(Fitted(transition=warm.copy(), lam=float(lam), lam_index=k))
        return out

    def fit(self, y, choice: CvChoice, grid: CvGrid) -> Fitted:
        lams = self._path(y, grid)
        if grid.lambdas is None and choice.lam_index is not None:
            lams = lams[:choice.lam_index + 1]
        else:
            lams = [x for x in lams if x > choice.lam] + [choice.lam]
        warm = None
        for lam in lams:
            warm = benchmarks.pvar_fit(y, lam, tol=self.tol, warm_start=warm)
        return Fitted(transition=warm, lam=float(lams[-1]), lam_index=choice.lam_index)


class GmwyEstimator:
    """Unpenalized Yule-Walker on a fixed support or bandwidth (no tuning)."""

    tuned = False

    def __init__(self, support: Union[SupportSet, int], label: Optional[str] = None):
        self.support = support
        if label is None:
            label = f"GMWY({support})" if isinstance(support, int) else "GMWY(cS)"
        self.label = label

    def fit(self, y, choice: CvChoice = CvChoice(), grid: Optional[CvGrid] = None) -> Fitted:
        support = self.support
        if isinstance(support, int):
            support = benchmarks.band_support(y.shape[0], support)
        g = benchmarks.gmwy_fit(y, support)
        return _structural(g.a_hat, g.b_hat, info={"rank_deficient": g.rank_deficient})


class ConstEstimator:
    """Forecast equal to the mean of the data it was fitted on."""

    tuned = False
    label = "CONST"

    def fit(self, y, choice: CvChoice = CvChoice(), grid: Optional[CvGrid] = None) -> Fitted:
        n = y.shape[0]
        return Fitted(transition=np.zeros((n, n)), offset=benchmarks.const_forecast(y))
