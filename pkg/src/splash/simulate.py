"""Monte Carlo designs and trajectory simulation.

Random numbers come from NumPy's ``PCG64`` bit generator seeded through
``SeedSequence(seed, spawn_key=(stream,))``. Normal draws use
``Generator.standard_normal`` (the ziggurat method), whose output NumPy
guarantees to be platform independent for a fixed bit stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .model import StModel, reduced_form


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngSpec":
        """The same seed with a different stream number."""
        return RngSpec(self.seed, stream)


@dataclass
class Panel:
    """``N x T`` observations; column ``t`` is ``y_t``."""

    values: np.ndarray
    unit_labels: list = field(default=None)
    time_index: list = field(default=None)

    def __post_init__(self):
        self.values = linalg.as_matrix(self.values, "panel values")
        n, t = self.values.shape
        if self.unit_labels is None:
            self.unit_labels = [f"y{i + 1}" for i in range(n)]
        else:
            self.unit_labels = [str(s) for s in self.unit_labels]
        if len(self.unit_labels) != n:
            raise ValueError("unit_labels length does not match number of rows")
        if self.time_index is not None and len(self.time_index) != t:
            raise ValueError("time_index length does not match number of columns")

    @property
    def n_units(self) -> int:
        return self.values.shape[0]

    @property
    def n_time(self) -> int:
        return self.values.shape[1]

    def slice_time(self, start: int, stop: int) -> "Panel":
        ti = None if self.time_index is None else list(self.time_index[start:stop])
        return Panel(self.values[:, start:stop], list(self.unit_labels), ti)


def _band_mask(n: int, k: int) -> np.ndarray:
    i, j = np.indices((n, n))
    return np.abs(i - j) <= k


def _design_a_draw(gen: np.random.Generator, n: int, k0: int):
    i, j = np.indices((n, n))
    dist = np.abs(i - j)
    mats = []
    for _ in range(2):
        edge = gen.choice([-2.0, 2.0], size=(n, n))
        zero = gen.random((n, n)) < 0.4
        gauss = gen.standard_normal((n, n))
        m = np.where(zero, 0.0, gauss)
        m = np.where(dist == k0, edge, m)
        m[dist > k0] = 0.0
        mats.append(m)
    a, b = mats
    np.fill_diagonal(a, 0.0)
    eta1, eta2 = gen.uniform(0.4, 0.8, size=2)
    na, nb = linalg.spectral_norm(a), linalg.spectral_norm(b)
    a = eta1 * a / na
    b = eta2 * b / nb
    return a, b


def gen_design_a(n: int, k0: int = 3, rng: RngSpec = RngSpec(0), max_redraws: int = 1000) -> StModel:
    """Random banded ``A`` and ``B`` of bandwidth ``k0``.

    Entries on the outermost diagonals ``|i - j| = k0`` are +-2 with equal
    probability; the remaining in-band entries (the diagonal of ``B``
    included) are zero with probability 0.4 and standard normal otherwise.
    The diagonal of ``A`` is then zeroed and both matrices are rescaled to
    spectral norms drawn from ``U[0.4, 0.8]``. Draws with
    ``||(I - A)^{-1} B||_2 > 0.95`` are rejected and redrawn.
    """
    if n < 4:
        raise ValueError("design A needs n >= 4")
    if not 0 <= k0 < n // 4:
        raise ValueError(f"k0 must satisfy 0 <= k0 < floor(n/4) = {n // 4}")
    gen = rng.generator()
    for _ in range(max_redraws):
        a, b = _design_a_draw(gen, n, k0)
        if not (np.any(a) and np.any(b)):
            continue
        model = StModel(a, b, np.eye(n), bandwidth_k=k0, bandwidth_l0=0)
        try:
            c = reduced_form(model).c
        except np.linalg.LinAlgError:
            continue
        if linalg.spectral_norm(c) <= 0.95:
            return model
    raise RuntimeError(f"no stable design A draw within {max_redraws} attempts")


def grid_neighbors(m: int) -> np.ndarray:
    """Adjacency of first horizontal/vertical neighbours on an ``m x m`` grid.

    Units are enumerated row-wise: unit ``r * m + c`` sits in row ``r`` and
    column ``c``.
    """
    n = m * m
    adj = np.zeros((n, n))
    for r in range(m):
        for c in range(m):
            u = r * m + c
            if c + 1 < m:
                adj[u, u + 1] = adj[u + 1, u] = 1.0
            if r + 1 < m:
                adj[u, u + m] = adj[u + m, u] = 1.0
    return adj


def gen_design_b(m: int, interaction: float = 0.2, b_diag: float | None = None) -> StModel:
    """Spatial grid model: ``A`` links grid neighbours, ``B = b_diag * I``.

    ``b_diag`` defaults to 0.23 for the 7 x 7 grid and 0.25 otherwise, which
    keeps ``||C||_2`` at 0.814 (m=5) and 0.882 (m=7).
    """
    if m < 2:
        raise ValueError("grid side m must be at least 2")
    if b_diag is None:
        b_diag = 0.23 if m == 7 else 0.25
    a = interaction * grid_neighbors(m)
    n = m * m
    return StModel(a, b_diag * np.eye(n), np.eye(n), bandwidth_k=m, bandwidth_l0=0)


def simulate_var(model: StModel, t: int, burn_in: int = 500, rng: RngSpec = RngSpec(0),
                 unit_labels: Sequence[str] | None = None) -> Panel:
    """Simulate ``t`` observations of the reduced form from ``y_0 = 0``.

    The first ``burn_in`` steps are discarded. Innovations are
    ``L z_s`` with ``L`` the Cholesky factor of ``sigma_eps`` and ``z_s``
    i.i.d. standard normal.
    """
    if t < 2:
        raise ValueError("need t >= 2")
    if burn_in < 0:
        raise ValueError("burn_in must be non-negative")
    rf = reduced_form(model)
    radius = np.abs(np.linalg.eigvals(rf.c)).max() if model.n else 0.0
    if radius >= 1:
        raise ValueError(f"model is not stable (spectral radius of C = {radius:.4f})")
    n = model.n
    gen = rng.generator()
    z = gen.standard_normal((burn_in + t, n))
    chol = np.linalg.cholesky(model.sigma_eps)
    shocks = z @ (rf.d @ chol).T
    c = rf.c
    out = np.empty((n, t))
    y = np.zeros(n)
    for s in range(burn_in + t):
        y = c @ y + shocks[s]
        if s >= burn_in:
            out[:, s - burn_in] = y
    return Panel(out, unit_labels)
