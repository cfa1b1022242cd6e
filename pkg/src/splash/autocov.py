"""Sample autocovariances, their banded versions and bandwidth selection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linalg import band
from .simulate import Panel, RngSpec


@dataclass(frozen=True)
class AcovPair:
    sigma0: np.ndarray
    sigma1: np.ndarray
    h: Optional[int] = None

    @property
    def n(self) -> int:
        return self.sigma0.shape[0]


def _values(p) -> np.ndarray:
    return p.values if isinstance(p, Panel) else np.asarray(p, dtype=float)


def sample_autocov(p, lag: int) -> np.ndarray:
    """``(1/T) sum_{t=2}^{T} y_t y_{t-lag}'`` for ``lag`` in {0, 1}.

    Both lags sum over ``t = 2..T`` and divide by the full length ``T``.
    """
    y = _values(p)
    if lag not in (0, 1):
        raise ValueError("lag must be 0 or 1")
    n, t = y.shape
    if t < lag + 2:
        raise ValueError(f"need at least {lag + 2} time points, got {t}")
    cur = y[:, 1:]
    prev = cur if lag == 0 else y[:, :-1]
    return cur @ prev.T / t


def banded_autocov(p, h: Optional[int]) -> AcovPair:
    """Sample lag-0 and lag-1 autocovariances banded at ``h`` (``None``: unbanded)."""
    s0 = sample_autocov(p, 0)
    s1 = sample_autocov(p, 1)
    if h is None:
        return AcovPair(s0, s1, None)
    return AcovPair(band(s0, h), band(s1, h), int(h))


def _diag_sums(m: np.ndarray) -> np.ndarray:
    """Sum of squared entries of ``m`` for each distance ``|i - j| = 0..n-1``."""
    n = m.shape[0]
    i, j = np.indices(m.shape)
    return np.bincount(np.abs(i - j).ravel(), weights=(m * m).ravel(), minlength=n)


def _pair_moments(y: np.ndarray, idx: np.ndarray):
    cur = y[:, idx]
    prev = y[:, idx - 1]
    k = len(idx)
    return cur @ cur.T / k, cur @ prev.T / k


def select_bandwidth(p, h_grid: Sequence[int], n_boot: int = 50, block_len: Optional[int] = None,
                     rng: RngSpec = RngSpec(0)) -> int:
    """Choose a banding level by block-resampled sample splitting.

    The lagged pairs ``(y_t, y_{t-1})``, ``t = 2..T``, are cut into
    contiguous blocks of ``block_len`` (default ``ceil(T^{1/3})``) after a
    random circular shift. Each replicate randomly assigns half the blocks
    to an estimation part and the rest to a validation part and scores
    every ``h`` by

        ||B_h(S0_est) - S0_val||_F + ||B_h(S1_est) - S1_val||_F.

    The ``h`` with the smallest average score over ``n_boot`` replicates is
    returned (ties go to the smaller ``h``). Banding away a diagonal pays
    off once its true entries are small relative to estimation noise, which
    is what the comparison against independent validation data measures.
    """
    y = _values(p)
    n, t = y.shape
    grid = sorted({int(h) for h in h_grid})
    if not grid:
        raise ValueError("h_grid must be nonempty")
    if grid[0] < 0:
        raise ValueError("bandwidths must be non-negative")
    if n_boot < 2:
        raise ValueError("n_boot must be at least 2")
    if block_len is None:
        block_len = max(1, math.ceil(t ** (1 / 3)))
    if block_len < 1 or block_len >= t:
        raise ValueError(f"block_len must lie in [1, n_time) = [1, {t})")
    pairs = np.arange(1, t)
    n_blocks = math.ceil(len(pairs) / block_len)
    if n_blocks < 2:
        raise ValueError("too few blocks to split; reduce block_len")
    gen = rng.generator()
    hs = np.clip(grid, 0, n - 1)
    risk = np.zeros(len(grid))
    for _ in range(n_boot):
        shifted = np.roll(pairs, -int(gen.integers(block_len)))
        blocks = [shifted[k * block_len:(k + 1) * block_len] for k in range(n_blocks)]
        order = gen.permutation(n_blocks)
        half = n_blocks // 2
        est = np.concatenate([blocks[k] for k in order[:half]])
        val = np.concatenate([blocks[k] for k in order[half:]])
        e0, e1 = _pair_moments(y, est)
        v0, v1 = _pair_moments(y, val)
        for est_m, val_m in ((e0, v0), (e1, v1)):
            inside = np.cumsum(_diag_sums(est_m - val_m))
            outside = np.cumsum(_diag_sums(val_m)[::-1])[::-1]
            outside = np.append(outside[1:], 0.0)
            risk += np.sqrt(inside[hs] + outside[hs])
    return grid[int(np.argmin(risk))]
