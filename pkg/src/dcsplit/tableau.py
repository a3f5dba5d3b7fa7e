"""Collocation tableau and quadrature sums over a single time step.

States are flat ``numpy`` arrays; a :class:`StageSet` collects the solution
values at the collocation nodes of one step together with the cached
right-hand-side evaluations at those nodes.  All quadrature sums run over the
cached values only, so each sweep costs exactly ``s`` coupled evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ButcherTableau",
    "StageSet",
    "radau_iia_3",
    "stage_increment",
    "full_step_increment",
]

_TOL = 1e-13


@dataclass(frozen=True)
class ButcherTableau:
    """Coefficients of an s-stage collocation method.

    ``p`` is the classical order of the full-step quadrature, ``q`` the stage
    order (per-node quadrature rows are exact for polynomials of degree
    ``q - 1``).
    """

    s: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p: int
    q: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if A.shape != (self.s, self.s) or b.shape != (self.s,) or c.shape != (self.s,):
            raise ValueError("inconsistent tableau shapes")
        if abs(b.sum() - 1.0) > _TOL:
            raise ValueError("weights do not integrate constants exactly")
        if np.max(np.abs(A.sum(axis=1) - c)) > _TOL:
            raise ValueError("row sums of A must equal c")
        if np.any(np.diff(c) <= 0):
            raise ValueError("c must be strictly increasing")
        if abs(c[-1] - 1.0) > _TOL or np.max(np.abs(A[-1] - b)) > _TOL:
            raise ValueError("method must be stiffly accurate (last row of A equals b)")
        for arr in (A, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def node_times(self, t0: float, dt: float) -> np.ndarray:
        return t0 + self.c * dt


def radau_iia_3() -> ButcherTableau:
    """Three-stage Radau IIA tableau (order 5, stage order 3).

    Coefficients are evaluated in double precision from their closed forms in
    ``sqrt(6)``, never from rounded decimals.
    """
    r6 = math.sqrt(6.0)
    c = np.array([(4.0 - r6) / 10.0, (4.0 + r6) / 10.0, 1.0])
    A = np.array(
        [
            [(88.0 - 7.0 * r6) / 360.0, (296.0 - 169.0 * r6) / 1800.0, (-2.0 + 3.0 * r6) / 225.0],
            [(296.0 + 169.0 * r6) / 1800.0, (88.0 + 7.0 * r6) / 360.0, (-2.0 - 3.0 * r6) / 225.0],
            [(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0],
        ]
    )
    b = np.array([(16.0 - r6) / 36.0, (16.0 + r6) / 36.0, 1.0 / 9.0])
    return ButcherTableau(s=3, A=A, b=b, c=c, p=5, q=3)


@dataclass(frozen=True)
class StageSet:
    """Node solutions of one step plus the cached RHS values at those nodes.

    ``nodes[j]`` approximates the solution at ``t0 + c[j] * dt`` and ``rhs[j]``
    is the fully coupled right-hand side evaluated at ``nodes[j]``.  Both
    arrays are frozen after construction; sweeps build new sets.
    """

    nodes: np.ndarray  # (s, n)
    rhs: np.ndarray  # (s, n)
    t0: float
    dt: float

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        rhs = np.ascontiguousarray(self.rhs, dtype=float)
        if nodes.shape != rhs.shape or nodes.ndim != 2:
            raise ValueError("nodes and rhs must share one (s, n) shape")
        nodes.setflags(write=False)
        rhs.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "rhs", rhs)

    @property
    def s(self) -> int:
        return self.nodes.shape[0]


def _weighted_rhs_sum(weights: np.ndarray, rhs: np.ndarray, dt: float) -> np.ndarray:
    # Fixed ascending-j summation order for reproducibility.
    acc = weights[0] * rhs[0]
    for j in range(1, len(weights)):
        acc = acc + weights[j] * rhs[j]
    return dt * acc


def stage_increment(tab: ButcherTableau, stages: StageSet, i: int) -> np.ndarray:
    """Quadrature of the RHS over the i-th node subinterval (i is 1-based).

    Row ``i`` minus row ``i - 1`` of the coefficient matrix, with row 0 taken
    as zero so that ``i = 1`` integrates from the step start to the first
    node.
    """
    if not 1 <= i <= tab.s:
        raise IndexError(f"stage index {i} outside 1..{tab.s}")
    if stages.s != tab.s:
        raise ValueError("stage set does not match tableau")
    w = tab.A[i - 1] - (tab.A[i - 2] if i >= 2 else 0.0)
    return _weighted_rhs_sum(w, stages.rhs, stages.dt)


def full_step_increment(tab: ButcherTableau, stages: StageSet) -> np.ndarray:
    """Quadrature of the RHS over the whole step (b-weighted sum)."""
    if stages.s != tab.s:
        raise ValueError("stage set does not match tableau")
    return _weighted_rhs_sum(tab.b, stages.rhs, stages.dt)
