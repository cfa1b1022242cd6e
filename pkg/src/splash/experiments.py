"""Monte Carlo replication of the simulation designs.

Random streams under one seed: stream 0 draws the Design A matrices (once,
shared by every replication); replication ``j`` simulates on stream
``1 + 2j`` and resamples for bandwidth selection on stream ``2 + 2j``.
Each replication simulates ``T + 1`` points, fits on the first ``T`` and
forecasts the last.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .benchmarks import model_support
from .estimators import CvGrid, GmwyEstimator, PvarEstimator, SplashEstimator
from .evaluation import estimation_error, rmsfe, ts_cross_validate
from .model import StModel, reduced_form
from .simulate import RngSpec, gen_design_a, gen_design_b, simulate_var

logger = logging.getLogger(__name__)

METHODS = ("splash0", "splash_a", "splash1", "gmwy_k0", "gmwy_cs", "pvar")
METHOD_LABELS = {
    "splash0": "SPLASH(0,lambda)",
    "splash_a": "SPLASH(alpha,lambda)",
    "splash1": "SPLASH(1,lambda)",
    "gmwy_k0": "GMWY(k0)",
    "gmwy_cs": "GMWY(cS)",
    "pvar": "PVAR",
}


def make_model(design: str, size: int, k0: int = 3, seed: int = 0) -> StModel:
    """Design ``"A"`` with ``N = size`` or design ``"B"`` on a ``size x size`` grid."""
    design = design.upper()
    if design == "A":
        return gen_design_a(size, k0=k0, rng=RngSpec(seed, 0))
    if design == "B":
        return gen_design_b(size)
    raise ValueError(f"unknown design {design!r}")


def make_estimator(name: str, model: StModel, bandwidth="bootstrap", rng: RngSpec = RngSpec(0),
                   n_boot: int = 50):
    if name == "splash0":
        return SplashEstimator(0.0, bandwidth, rng=rng, n_boot=n_boot, label=METHOD_LABELS[name])
    if name == "splash_a":
        return SplashEstimator(None, bandwidth, rng=rng, n_boot=n_boot, label=METHOD_LABELS[name])
    if name == "splash1":
        return SplashEstimator(1.0, bandwidth, rng=rng, n_boot=n_boot, label=METHOD_LABELS[name])
    if name == "gmwy_k0":
        return GmwyEstimator(model.bandwidth_k, label=METHOD_LABELS[name])
    if name == "gmwy_cs":
        return GmwyEstimator(model_support(model), label=METHOD_LABELS[name])
    if name == "pvar":
        return PvarEstimator(label=METHOD_LABELS[name])
    raise ValueError(f"unknown method {name!r}; choose from {METHODS}")


@dataclass
class MethodSummary:
    method: str
    rmsfe: float
    ee_a: float
    ee_b: float
    n_ok: int
    mean_abs_a: Optional[np.ndarray] = None
    seconds: float = 0.0


@dataclass
class ReplicateResult:
    design: str
    n: int
    t: int
    reps: int
    seed: int
    summaries: dict
    excluded: dict = field(default_factory=dict)
    model: Optional[StModel] = None

    def rows(self) -> list:
        """Long table rows ``(N, T, metric, method, value)``."""
        out = []
        for metric in ("RMSFE", "EE_A", "EE_B"):
            for name, s in self.summaries.items():
                val = {"RMSFE": s.rmsfe, "EE_A": s.ee_a, "EE_B": s.ee_b}[metric]
                out.append((self.n, self.t, metric, METHOD_LABELS.get(name, name), val))
        return out


def replicate(design: str, size: int, t: int, reps: int, seed: int = 0,
              methods: Sequence[str] = METHODS, k0: int = 3, bandwidth="bootstrap",
              grid: Optional[CvGrid] = None, n_boot: int = 50) -> ReplicateResult:
    """Run ``reps`` replications and aggregate RMSFE, EE_A and EE_B per method.

    A replication that fails for a method is logged and excluded from that
    method's aggregates; exclusions are counted in ``excluded``.
    """
    if reps < 1:
        raise ValueError("reps must be positive")
    grid = grid or CvGrid()
    model = make_model(design, size, k0=k0, seed=seed)
    c_true = reduced_form(model).c
    per = {name: {"c": [], "a": [], "b": [], "truth": [], "sec": 0.0} for name in methods}
    excluded = {name: 0 for name in methods}
    for j in range(reps):
        y = simulate_var(model, t + 1, rng=RngSpec(seed, 1 + 2 * j)).values
        train = np.ascontiguousarray(y[:, :t])
        truth = (c_true, y[:, t - 1], y[:, t])
        for name in methods:
            est = make_estimator(name, model, bandwidth, RngSpec(seed, 2 + 2 * j), n_boot)
            start = time.perf_counter()
            try:
                choice = ts_cross_validate(train, grid, est)
                fitted = est.fit(train, choice, grid)
                if not np.all(np.isfinite(fitted.transition)):
                    raise FloatingPointError("non-finite transition matrix")
            except Exception as exc:
                logger.warning("rep %d, method %s failed: %s", j, name, exc)
                excluded[name] += 1
                continue
            finally:
                per[name]["sec"] += time.perf_counter() - start
            per[name]["c"].append(fitted.transition)
            per[name]["truth"].append(truth)
            if fitted.a_hat is not None:
                per[name]["a"].append(fitted.a_hat)
                per[name]["b"].append(fitted.b_hat)
        logger.info("replication %d/%d done", j + 1, reps)
    summaries = {}
    for name in methods:
        d = per[name]
        if not d["c"]:
            summaries[name] = MethodSummary(name, np.nan, np.nan, np.nan, 0, seconds=d["sec"])
            continue
        has_ab = len(d["a"]) == len(d["c"])
        summaries[name] = MethodSummary(
            name,
            rmsfe(d["c"], d["truth"]),
            estimation_error(d["a"], model.a) if has_ab else np.nan,
            estimation_error(d["b"], model.b) if has_ab else np.nan,
            len(d["c"]),
            np.mean(np.abs(d["a"]), axis=0) if has_ab else None,
            d["sec"],
        )
    return ReplicateResult(design.upper(), model.n, t, reps, seed, summaries, excluded, model)


def diagonal_profile(mean_abs_a: np.ndarray) -> np.ndarray:
    """Mean absolute coefficient on each diagonal pair ``|i - j| = k``, ``k = 0..N-1``."""
    n = mean_abs_a.shape[0]
    i, j = np.indices(mean_abs_a.shape)
    dist = np.abs(i - j).ravel()
    sums = np.bincount(dist, weights=mean_abs_a.ravel(), minlength=n)
    counts = np.bincount(dist, minlength=n)
    return sums / counts
