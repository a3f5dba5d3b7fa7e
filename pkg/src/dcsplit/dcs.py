"""Deferred-correction splitting sweeps over the collocation nodes.

One step works on a :class:`DcsState`: the initial pass propagates the start
value node to node with the splitting scheme; each correction sweep forms the
quadrature predictions from the previous node set and updates the nodes with
the difference of two splitting substeps.  Node 1 never needs a splitting
call (its correction vanishes identically), so a sweep costs exactly
``2 (s - 1)`` splitting substeps and ``s`` coupled RHS evaluations.

In hybrid spatial mode the splitting substeps run on a low-order spatial
discretization while the cached RHS values (quadrature and error estimation)
use the high-order one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splitting import SplittingScheme, splitting_step
from .subsolvers import Propagator, SubsolverConfig, diffusion_propagator, reaction_propagator
from .tableau import ButcherTableau, StageSet, radau_iia_3, stage_increment

__all__ = ["DcsState", "DcsSweeper"]


@dataclass(frozen=True)
class DcsState:
    """Provisional node set after ``k`` correction sweeps of one step."""

    tableau: ButcherTableau
    k: int
    u_tilde: StageSet
    u_hat: np.ndarray | None  # quadrature predictions used to form this iterate
    u0: np.ndarray
    t0: float
    dt: float

    @property
    def end_value(self) -> np.ndarray:
        """Step result: the last node (the scheme is stiffly accurate)."""
        return self.u_tilde.nodes[-1]


class DcsSweeper:
    """Runs initial and correction sweeps for one splitting scheme.

    ``rhs`` supplies the fully coupled right-hand side entering the
    quadrature sums; the propagators advance the split subproblems.  For
    hybrid spatial mode build the propagators from the low-order problem and
    pass the high-order ``rhs`` (see :meth:`for_problem` / :meth:`hybrid`).
    """

    def __init__(self, tableau: ButcherTableau, scheme: SplittingScheme,
                 diffusion: Propagator, reaction: Propagator, rhs, *, hybrid: bool = False):
        self.tableau = tableau
        self.scheme = scheme
        self.diffusion = diffusion
        self.reaction = reaction
        self.rhs = rhs
        self.hybrid = hybrid
        self.splitting_steps = 0

    # -- construction ---------------------------------------------------------

    @classmethod
    def for_problem(cls, problem, scheme: SplittingScheme,
                    cfg: SubsolverConfig | None = None, *, tableau: ButcherTableau | None = None,
                    backend: str = "auto") -> "DcsSweeper":
        cfg = cfg or SubsolverConfig()
        return cls(
            tableau or radau_iia_3(),
            scheme,
            diffusion_propagator(problem, cfg),
            reaction_propagator(problem, cfg, backend=backend),
            problem.rhs,
        )

    @classmethod
    def hybrid(cls, problem_high, problem_low, scheme: SplittingScheme,
               cfg: SubsolverConfig | None = None, *, tableau: ButcherTableau | None = None,
               backend: str = "auto") -> "DcsSweeper":
        """Low-order splitting substeps, high-order quadrature RHS."""
        if problem_high.size != problem_low.size:
            raise ValueError("hybrid mode needs both discretizations on one grid")
        cfg = cfg or SubsolverConfig()
        return cls(
            tableau or radau_iia_3(),
            scheme,
            diffusion_propagator(problem_low, cfg),
            reaction_propagator(problem_low, cfg, backend=backend),
            problem_high.rhs,
            hybrid=True,
        )

    # -- sweep machinery --------------------------------------------------------

    def _split(self, u, t, dt):
        self.splitting_steps += 1
        return splitting_step(self.scheme, self.diffusion, self.reaction, u, t, dt)

    def _substep_lengths(self):
        c = self.tableau.c
        return np.diff(np.concatenate(([0.0], c)))

    def initial_sweep(self, u0: np.ndarray, t0: float, dt: float) -> DcsState:
        """Propagate the start value across the nodes with the splitting scheme."""
        if dt <= 0.0:
            raise ValueError("step size must be positive")
        tab = self.tableau
        u0 = np.asarray(u0, dtype=float)
        nodes = np.empty((tab.s, u0.size))
        rhs = np.empty_like(nodes)
        times = tab.node_times(t0, dt)
        u_prev = u0
        for i, frac in enumerate(self._substep_lengths()):
            t_start = t0 if i == 0 else times[i - 1]
            u_prev = self._split(u_prev, t_start, frac * dt)
            nodes[i] = u_prev
            rhs[i] = self.rhs.apply(times[i], u_prev)
        stages = StageSet(nodes=nodes, rhs=rhs, t0=t0, dt=dt)
        return DcsState(tableau=tab, k=0, u_tilde=stages, u_hat=None, u0=u0, t0=t0, dt=dt)

    def quadrature_predict(self, state: DcsState) -> np.ndarray:
        """Node predictions: previous node plus the node-interval quadrature."""
        tab = state.tableau
        u_hat = np.empty_like(state.u_tilde.nodes)
        prev = state.u0
        for i in range(1, tab.s + 1):
            u_hat[i - 1] = prev + stage_increment(tab, state.u_tilde, i)
            prev = state.u_tilde.nodes[i - 1]
        return u_hat

    def correction_sweep(self, state: DcsState) -> DcsState:
        """One deferred-correction pass; returns the state at iteration k + 1."""
        tab = state.tableau
        t0, dt = state.t0, state.dt
        u_hat = self.quadrature_predict(state)
        times = tab.node_times(t0, dt)
        fracs = self._substep_lengths()

        nodes = np.empty_like(state.u_tilde.nodes)
        rhs = np.empty_like(nodes)
        nodes[0] = u_hat[0]  # the first correction vanishes identically
        rhs[0] = self.rhs.apply(times[0], nodes[0])
        for i in range(2, tab.s + 1):
            sub_dt = fracs[i - 1] * dt
            t_prev = times[i - 2]
            advanced_new = self._split(nodes[i - 2], t_prev, sub_dt)
            advanced_old = self._split(state.u_tilde.nodes[i - 2], t_prev, sub_dt)
            nodes[i - 1] = u_hat[i - 1] + advanced_new - advanced_old
            rhs[i - 1] = self.rhs.apply(times[i - 1], nodes[i - 1])

        stages = StageSet(nodes=nodes, rhs=rhs, t0=t0, dt=dt)
        return DcsState(tableau=tab, k=state.k + 1, u_tilde=stages, u_hat=u_hat,
                        u0=state.u0, t0=t0, dt=dt)
