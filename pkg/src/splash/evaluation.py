"""Tuning, rolling-window forecasting and forecast-accuracy metrics."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .estimators import CvChoice, CvGrid
from .linalg import spectral_norm

logger = logging.getLogger(__name__)

LOSSES = ("squared", "absolute")


def _values(p) -> np.ndarray:
    y = p.values if hasattr(p, "values") else p
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise ValueError("panel must be a 2-D (units x time) array")
    return y


def _loss(e, loss: str) -> np.ndarray:
    if loss == "squared":
        return np.square(e)
    if loss == "absolute":
        return np.abs(e)
    raise ValueError(f"loss must be one of {LOSSES}, got {loss!r}")


# ---------------------------------------------------------------------------
# cross-validation


def ts_cross_validate(p, grid: CvGrid, estimator) -> CvChoice:
    """Chronological train/validation split.

    Every candidate is fitted once on the first ``ceil(train_frac * T)``
    columns and scored by the mean squared one-step forecast error over the
    remaining columns, always forecasting from the observed previous column.
    Ties go to the largest ``lam``, then to the smallest ``alpha``.

    Estimators without hyperparameters (``estimator.tuned`` false) get an
    empty :class:`CvChoice`.
    """
    if not getattr(estimator, "tuned", True):
        return CvChoice()
    y = _values(p)
    t = y.shape[1]
    n_train = math.ceil(grid.train_frac * t)
    if n_train < 2 or t - n_train < 2:
        raise ValueError(f"T={t} too short for train_frac={grid.train_frac}: "
                         f"segments of {n_train} and {t - n_train} columns")
    train = np.ascontiguousarray(y[:, :n_train])
    x_prev = y[:, n_train - 1:t - 1]
    x_next = y[:, n_train:]
    best = None
    for cand in estimator.candidates(train, grid):
        pred = cand.transition @ x_prev
        if cand.offset is not None:
            pred = pred + cand.offset[:, None]
        err = x_next - pred
        score = float(np.mean(err * err))
        if not np.isfinite(score):
            continue
        lam = -np.inf if cand.lam is None else cand.lam
        alpha = np.inf if cand.alpha is None else cand.alpha
        key = (score, -lam, alpha)
        if best is None or key < best[0]:
            best = (key, CvChoice(lam=cand.lam, alpha=cand.alpha, lam_index=cand.lam_index, score=score))
    if best is None:
        raise RuntimeError("no candidate produced a finite validation error")
    return best[1]


# ---------------------------------------------------------------------------
# simulation metrics


def rmsfe(c_hats: Sequence, truths: Sequence) -> float:
    """Relative mean-squared forecast error against the true transition matrix.

    ``truths`` holds ``(C, y_T, y_{T+1})`` per replication; the ratio is
    ``sum_j |y_{T+1} - C_hat_j y_T|^2 / sum_j |y_{T+1} - C y_T|^2``.
    """
    if len(c_hats) != len(truths) or not truths:
        raise ValueError("need one estimate per replication and at least one replication")
    num = den = 0.0
    for c_hat, (c, y_last, y_next) in zip(c_hats, truths):
        y_last = np.asarray(y_last, dtype=float)
        y_next = np.asarray(y_next, dtype=float)
        num += float(np.sum((y_next - np.asarray(c_hat) @ y_last) ** 2))
        den += float(np.sum((y_next - np.asarray(c) @ y_last) ** 2))
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    return num / den


def estimation_error(est: Sequence, truth) -> float:
    """Mean spectral-norm distance between estimates and the truth."""
    if not est:
        raise ValueError("no estimates")
    truth = np.asarray(truth, dtype=float)
    return float(np.mean([spectral_norm(np.asarray(e, dtype=float) - truth) for e in est]))


# ---------------------------------------------------------------------------
# Diebold-Mariano


@dataclass(frozen=True)
class DmResult:
    stat: float
    p: float


def _bartlett_lrv(d: np.ndarray) -> float:
    n = d.shape[0]
    u = d - d.mean()
    lags = int(math.floor(n ** (1.0 / 3.0)))
    lrv = float(u @ u) / n
    for k in range(1, lags + 1):
        lrv += 2.0 * (1.0 - k / (lags + 1.0)) * float(u[k:] @ u[:-k]) / n
    return lrv


def dm_test(e1, e2, loss: str = "squared") -> DmResult:
    """Two-sided Diebold-Mariano test of equal predictive accuracy.

    Negative statistics mean ``e1`` has the smaller loss. The long-run
    variance uses a Bartlett kernel with ``floor(n^(1/3))`` lags; the
    p-value is from the standard normal, without small-sample correction.
    """
    e1 = np.asarray(e1, dtype=float).ravel()
    e2 = np.asarray(e2, dtype=float).ravel()
    if e1.shape != e2.shape:
        raise ValueError("error series must have equal length")
    if e1.size < 10:
        raise ValueError("need at least 10 forecast errors")
    d = _loss(e1, loss) - _loss(e2, loss)
    n = d.size
    mean = float(d.mean())
    lrv = _bartlett_lrv(d)
    scale = max(float(np.abs(d).max()), 1e-300)
    if lrv <= (1e-12 * scale) ** 2:
        if abs(mean) <= 1e-12 * scale:
            return DmResult(0.0, 1.0)
        return DmResult(math.copysign(math.inf, mean), 0.0)
    stat = mean / math.sqrt(lrv / n)
    return DmResult(stat, float(2.0 * stats.norm.sf(abs(stat))))


# ---------------------------------------------------------------------------
# rolling windows


@dataclass
class ForecastRecord:
    """One-step forecast errors of a method, one row per window position.

    Failed windows keep a row of NaN and are listed in ``failed``.
    """

    label: str
    errors: np.ndarray
    forecasts: np.ndarray
    seconds: np.ndarray
    choices: list = field(default_factory=list)
    failed: list = field(default_factory=list)

    def __post_init__(self):
        if self.errors.shape != self.forecasts.shape or self.errors.ndim != 2:
            raise ValueError("errors and forecasts must be (n_windows, n_units) arrays")

    @property
    def n_windows(self) -> int:
        return self.errors.shape[0]

    @property
    def n_units(self) -> int:
        return self.errors.shape[1]


def window_length(t: int, window_frac: float) -> int:
    if not 0 < window_frac < 1:
        raise ValueError("window_frac must lie in (0, 1)")
    return int(round(window_frac * t))


def rolling_windows(p, window_frac: float, estimator, grid: CvGrid, label: Optional[str] = None) -> ForecastRecord:
    """Rolling one-step forecasts with a window of ``round(window_frac * T)`` columns.

    For each position the window is demeaned unit by unit, the estimator is
    tuned on it with :func:`ts_cross_validate` and refitted, the next
    (demeaned) column is forecast and the means are added back. The result
    has ``T - window_length`` rows.
    """
    y = _values(p)
    n, t = y.shape
    w = window_length(t, window_frac)
    if w < 3:
        raise ValueError(f"window length {w} is below 3")
    if w >= t:
        raise ValueError(f"window length {w} leaves nothing to forecast in T={t}")
    n_win = t - w
    forecasts = np.full((n_win, n), np.nan)
    seconds = np.zeros(n_win)
    choices, failed = [], []
    for s in range(n_win):
        start = time.perf_counter()
        window = y[:, s:s + w]
        means = window.mean(axis=1)
        centred = np.ascontiguousarray(window - means[:, None])
        try:
            choice = ts_cross_validate(centred, grid, estimator)
            model = estimator.fit(centred, choice, grid)
            fc = model.predict(centred[:, -1]) + means
            if not np.all(np.isfinite(fc)):
                raise FloatingPointError("non-finite forecast")
            forecasts[s] = fc
            choices.append(choice)
        except Exception as exc:  # record and move on
            logger.warning("window %d failed for %s: %s", s, label or type(estimator).__name__, exc)
            failed.append(s)
            choices.append(None)
        seconds[s] = time.perf_counter() - start
    errors = y[:, w:].T - forecasts
    return ForecastRecord(label or getattr(estimator, "label", type(estimator).__name__),
                          errors, forecasts, seconds, choices, failed)


# ---------------------------------------------------------------------------
# comparison table


@dataclass(frozen=True)
class ScoreRow:
    label: str
    wins: int
    significant_wins: int
    ratio: float
    n_units: int


def score_table(records: Sequence[ForecastRecord], benchmark: ForecastRecord, loss: str = "absolute",
                level: float = 0.05) -> list:
    """Compare each record with the benchmark, unit by unit.

    ``wins``: units whose mean loss is strictly below the benchmark's.
    ``significant_wins``: wins whose Diebold-Mariano p-value is below
    ``level``. ``ratio``: total loss over all units and windows divided by
    the benchmark's. Windows missing in either record are dropped.
    """
    rows = []
    for rec in records:
        if rec.errors.shape != benchmark.errors.shape:
            raise ValueError(f"record {rec.label!r} does not align with the benchmark")
        ok = np.all(np.isfinite(rec.errors), axis=1) & np.all(np.isfinite(benchmark.errors), axis=1)
        e_m = rec.errors[ok]
        e_b = benchmark.errors[ok]
        l_m = _loss(e_m, loss)
        l_b = _loss(e_b, loss)
        wins = sig = 0
        for i in range(rec.n_units):
            if l_m[:, i].mean() < l_b[:, i].mean():
                wins += 1
                if e_m.shape[0] >= 10 and dm_test(e_m[:, i], e_b[:, i], loss).p < level:
                    sig += 1
        total_b = float(l_b.sum())
        ratio = float(l_m.sum()) / total_b if total_b > 0 else (1.0 if l_m.sum() == 0 else math.inf)
        rows.append(ScoreRow(rec.label, wins, sig, ratio, rec.n_units))
    return rows
