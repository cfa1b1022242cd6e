"""Diagonal group layout and the stacked generalized Yule-Walker system.

Population identity: ``Sigma_1 = A Sigma_1 + B Sigma_0``. Transposing and
reading off row ``i`` gives ``sigma_i = V c_i`` with ``V = [Sigma_1' Sigma_0]``,
``sigma_i`` the ``i``-th row of ``Sigma_1`` and ``c_i = (a_i., b_i.)``.

Coefficient ordering is equation-major. Within equation ``i`` the ``A``
columns come first (``j`` ascending, ``1 <= |i-j| <= cap``), then the ``B``
columns (``j`` ascending, ``|i-j| <= cap``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag

from .autocov import AcovPair


@dataclass(frozen=True)
class Group:
    name: str
    matrix: str
    k: int
    members: np.ndarray

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def weight(self) -> float:
        return float(np.sqrt(self.size))


@dataclass
class GroupLayout:
    n_units: int
    cap: int
    coeff_index: dict
    positions: list
    groups: list
    equation_columns: list
    equation_slices: list = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.positions)

    def v_column(self, matrix: str, j: int) -> int:
        """Column of ``[Sigma_1' Sigma_0]`` that multiplies entry ``(matrix, ., j)``."""
        return j if matrix == "A" else self.n_units + j

    def group(self, matrix: str, k: int) -> Group:
        for g in self.groups:
            if g.matrix == matrix and g.k == k:
                return g
        raise KeyError((matrix, k))


def build_layout(n: int, cap: int | None = None, allow_any_cap: bool = False) -> GroupLayout:
    """Group layout for ``n`` units with admissible bandwidth ``cap``.

    ``cap`` defaults to ``floor(n/4)`` and must satisfy
    ``1 <= cap <= floor(n/4)``. ``allow_any_cap`` lifts the limit to
    ``0 <= cap <= n-1`` for exactness checks against population moments.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if cap is None:
        cap = n // 4
    if allow_any_cap:
        if not 0 <= cap <= n - 1:
            raise ValueError(f"cap must lie in [0, {n - 1}]")
    elif not 1 <= cap <= n // 4:
        raise ValueError(f"cap must lie in [1, floor(n/4)] = [1, {n // 4}], got {cap}")

    coeff_index: dict = {}
    positions: list = []
    equation_columns: list = []
    equation_slices: list = []
    for i in range(n):
        start = len(positions)
        lo, hi = max(0, i - cap), min(n - 1, i + cap)
        cols = [("A", j) for j in range(lo, hi + 1) if j != i]
        cols += [("B", j) for j in range(lo, hi + 1)]
        for mat, j in cols:
            coeff_index[(mat, i, j)] = len(positions)
            positions.append((mat, i, j))
        equation_columns.append(cols)
        equation_slices.append(slice(start, len(positions)))

    groups = []
    for mat, ks in (("A", range(1, cap + 1)), ("B", range(0, cap + 1))):
        for k in ks:
            members = [p for p, (m, i, j) in enumerate(positions) if m == mat and abs(i - j) == k]
            if members:
                groups.append(Group(f"{mat}{k}", mat, k, np.array(members, dtype=np.intp)))
    return GroupLayout(n, cap, coeff_index, positions, groups, equation_columns, equation_slices)


@dataclass
class YwSystem:
    target: np.ndarray
    blocks: list
    layout: GroupLayout

    def design(self) -> np.ndarray:
        """Dense block-diagonal design ``diag(V_1, ..., V_N)``."""
        return block_diag(*self.blocks)

    def residual(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        n = self.layout.n_units
        out = self.target.copy()
        for i, (blk, sl) in enumerate(zip(self.blocks, self.layout.equation_slices)):
            out[i * n:(i + 1) * n] -= blk @ c[sl]
        return out

    def loss(self, c) -> float:
        r = self.residual(c)
        return float(r @ r)


def assemble_system(acov: AcovPair, layout: GroupLayout) -> YwSystem:
    """Stack ``sigma_i`` and select the columns of ``V = [S1' S0]`` per equation."""
    n = layout.n_units
    s0 = np.asarray(acov.sigma0, dtype=float)
    s1 = np.asarray(acov.sigma1, dtype=float)
    if s0.shape != (n, n) or s1.shape != (n, n):
        raise ValueError(f"autocovariances have shape {s0.shape}, layout expects ({n}, {n})")
    v = np.hstack([s1.T, s0])
    target = s1.reshape(-1).copy()
    blocks = []
    for cols in layout.equation_columns:
        idx = [layout.v_column(m, j) for m, j in cols]
        blocks.append(v[:, idx])
    return YwSystem(target, blocks, layout)
