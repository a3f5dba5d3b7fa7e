"""Sub-integrators for the two split flows.

The reaction flow is integrated point by point with an adaptive implicit
3-stage collocation method (compiled kernel when available, batched numpy
otherwise); the diffusion flow with an adaptive embedded explicit Runge-Kutta
pair whose internal steps are capped at the explicit stability limit of the
discrete diffusion operator.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from .errors import NewtonDivergence, StepUnderflow
from .stiffstep import PointwiseRadau, newton_tolerance

__all__ = [
    "SubsolverConfig",
    "Propagator",
    "reaction_propagator",
    "diffusion_propagator",
    "compiled_kernel_available",
    "NewtonDivergence",
    "StepUnderflow",
]

try:  # compiled extension is optional; the numpy path is the fallback
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - exercised on builds without a compiler
    _compiled = None


def compiled_kernel_available() -> bool:
    return _compiled is not None and os.environ.get("DCSPLIT_PURE_PYTHON") != "1"


@dataclass(frozen=True)
class SubsolverConfig:
    """Per-subproblem tolerances and iteration caps.

    Defaults follow the reasonable working tolerance of 1e-5 for both split
    flows; order studies override them with much tighter values.
    """

    rtol: float = 1e-5
    atol: float = 1e-5
    max_internal_steps: int = 100_000
    newton_tol: float | None = None
    newton_max_iters: int = 7

    def __post_init__(self):
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_internal_steps < 1 or self.newton_max_iters < 1:
            raise ValueError("iteration caps must be at least 1")


class Propagator:
    """Deterministic sub-flow: ``advance(u0, t0, dt)`` integrates one subproblem."""

    def advance(self, u0: np.ndarray, t0: float, dt: float) -> np.ndarray:
        raise NotImplementedError


class _ReactionPropagator(Propagator):
    def __init__(self, problem, cfg: SubsolverConfig, backend: str):
        self.m = problem.m
        self.cfg = cfg
        self._stepper = PointwiseRadau(
            problem.reaction_f,
            problem.reaction_jac,
            problem.m,
            rtol=cfg.rtol,
            atol=cfg.atol,
            newton_tol=cfg.newton_tol,
            newton_max_iters=cfg.newton_max_iters,
            max_internal_steps=cfg.max_internal_steps,
        )
        use_compiled = backend == "compiled" or (backend == "auto" and compiled_kernel_available())
        self._kernel_params = None
        if use_compiled and problem.kernel_tag == "bz" and _compiled is not None:
            self._kernel_params = tuple(map(float, problem.kernel_params))
        elif backend == "compiled":
            raise ValueError("compiled backend requested but no kernel matches this problem")

    def advance(self, u0, t0, dt):
        if dt < 0.0:
            raise ValueError("negative advance span")
        if dt == 0.0:
            return u0.copy()
        U = u0.reshape(-1, self.m)
        if self._kernel_params is not None:
            out = np.array(U, dtype=float)
            status = _compiled.bz_advance(
                out,
                float(t0),
                float(dt),
                *self._kernel_params,
                self.cfg.rtol,
                self.cfg.atol,
                newton_tolerance(self.cfg.rtol, self.cfg.newton_tol),
                self.cfg.newton_max_iters,
                self.cfg.max_internal_steps,
            )
            if status > 0:
                raise StepUnderflow(f"internal step underflow at point {status - 1}")
            if status < 0:
                raise NewtonDivergence(f"stage solve stalled at point {-status - 1}")
            return out.reshape(u0.shape)
        return self._stepper.advance(U, t0, dt).reshape(u0.shape)


class _DiffusionPropagator(Propagator):
    def __init__(self, problem, cfg: SubsolverConfig):
        self._apply = problem.diffusion_apply
        self._max_step = problem.cfl_limit
        self.cfg = cfg

    def advance(self, u0, t0, dt):
        if dt < 0.0:
            raise ValueError("negative advance span")
        if dt == 0.0:
            return u0.copy()
        stepper = RK45(
            lambda t, y: self._apply(t, y),
            t0,
            u0,
            t_bound=t0 + dt,
            max_step=min(self._max_step, dt),
            rtol=self.cfg.rtol,
            atol=self.cfg.atol,
        )
        steps = 0
        while stepper.status == "running":
            stepper.step()
            steps += 1
            if steps > self.cfg.max_internal_steps:
                raise StepUnderflow(
                    f"exceeded max_internal_steps={self.cfg.max_internal_steps}"
                )
        if stepper.status != "finished":
            raise StepUnderflow("explicit substep size underflow")
        return stepper.y


def reaction_propagator(problem, cfg: SubsolverConfig | None = None, backend: str = "auto") -> Propagator:
    """Pointwise stiff integrator for the reaction terms of ``problem``.

    ``backend`` picks the compiled kernel ("compiled"), the batched numpy
    path ("python"), or whichever is available ("auto").
    """
    return _ReactionPropagator(problem, cfg or SubsolverConfig(), backend)


def diffusion_propagator(problem, cfg: SubsolverConfig | None = None) -> Propagator:
    """Adaptive explicit integrator for the linear diffusion terms of ``problem``."""
    return _DiffusionPropagator(problem, cfg or SubsolverConfig())
