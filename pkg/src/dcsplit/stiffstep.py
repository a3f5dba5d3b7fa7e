"""Adaptive 3-stage Radau IIA stepping machinery shared by the pointwise
reaction subsolver and the fully coupled reference solver.

The embedded error estimate is the classical stiffly damped one: the defect of
a third-order rule that adds the step start as an extra node, filtered through
``(gamma/h I - J)^{-1}`` where ``gamma`` is the real eigenvalue of the inverse
coefficient matrix.  Error control in the weighted RMS norm with weights
``atol + rtol * |u|``.

:class:`PointwiseRadau` integrates a batch of independent pointwise ODE
systems, each with its own adaptive internal step sequence (halving on
rejection, doubling well below tolerance).  Per-point results do not depend on
which other points share the batch.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NewtonDivergence, StepUnderflow
from .tableau import radau_iia_3

__all__ = ["RADAU_A", "RADAU_C", "ERROR_WEIGHTS", "INV_A_REAL_EIG", "wrms", "PointwiseRadau"]

_EPS = float(np.finfo(float).eps)

_TAB = radau_iia_3()
RADAU_A = _TAB.A
RADAU_C = _TAB.c

# Real eigenvalue of inv(A); the step matrix of the scalar filter solve.
INV_A_REAL_EIG = 3.0 + 3.0 ** (2.0 / 3.0) - 3.0 ** (1.0 / 3.0)

# Weights of the node increments in the embedded lower-order defect.
ERROR_WEIGHTS = np.array(
    [(-13.0 - 7.0 * math.sqrt(6.0)) / 3.0, (-13.0 + 7.0 * math.sqrt(6.0)) / 3.0, -1.0 / 3.0]
)


def wrms(v: np.ndarray, scale: np.ndarray, axis=None) -> np.ndarray | float:
    """Weighted root-mean-square norm of ``v`` with componentwise ``scale``."""
    r = (v / scale) ** 2
    return np.sqrt(np.mean(r, axis=axis))


def newton_tolerance(rtol: float, explicit: float | None = None) -> float:
    """Stopping tolerance of the simplified Newton iteration in scaled units."""
    if explicit is not None:
        return explicit
    return max(10.0 * _EPS / rtol, min(0.03, math.sqrt(rtol)))


class PointwiseRadau:
    """Batched adaptive implicit integrator for independent pointwise systems.

    ``f`` and ``jac`` act on point batches: ``f((P, m)) -> (P, m)`` and
    ``jac((P, m)) -> (P, m, m)``.  Each point advances with its own internal
    step sequence; the stage system per point is solved by simplified Newton
    (Jacobian frozen at the internal step start) on the dense ``3m x 3m``
    matrix.
    """

    def __init__(self, f, jac, m: int, rtol: float, atol: float,
                 newton_tol: float | None = None, newton_max_iters: int = 7,
                 max_internal_steps: int = 100_000):
        self.f = f
        self.jac = jac
        self.m = m
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.newton_tol = newton_tolerance(self.rtol, newton_tol)
        self.newton_max_iters = int(newton_max_iters)
        self.max_internal_steps = int(max_internal_steps)

    # -- single batched step attempt over active points ---------------------

    def _attempt(self, u, h, rejected):
        """One internal step attempt per point; returns (unew, err_norm, newton_ok)."""
        P, m = u.shape
        s = 3
        J = self.jac(u)
        f0 = self.f(u)
        scale = self.atol + self.rtol * np.abs(u)

        # M = I - h (A kron J), assembled per point.
        M = -np.einsum("jl,pab->pjalb", RADAU_A, J).reshape(P, 1, s * m, s * m)
        M = M[:, 0] * h[:, None, None]
        M[:, np.arange(s * m), np.arange(s * m)] += 1.0
        Minv = np.linalg.inv(M)

        Z = np.zeros((P, s, m))
        scale3 = np.tile(scale, (1, s)).reshape(P, s * m)
        ok = np.zeros(P, dtype=bool)
        dz_old = None
        for _ in range(self.newton_max_iters):
            F = self.f((u[:, None, :] + Z).reshape(P * s, m)).reshape(P, s, m)
            R = h[:, None, None] * np.einsum("jl,plm->pjm", RADAU_A, F) - Z
            delta = (Minv @ R.reshape(P, s * m, 1))[:, :, 0]
            upd = ~ok
            Z[upd] += delta[upd].reshape(-1, s, m)
            dz = wrms(delta.reshape(P, s * m), scale3, axis=1)
            conv = dz <= self.newton_tol
            if dz_old is not None:
                with np.errstate(divide="ignore", invalid="ignore"):
                    rate = dz / np.maximum(dz_old, 1e-300)
                    # Contraction-based early acceptance.
                    conv |= (rate < 1.0) & (
                        rate / np.maximum(1.0 - rate, 1e-300) * dz < self.newton_tol
                    )
            ok |= conv & upd
            if ok.all():
                break
            dz_old = dz

        y1 = u + Z[:, s - 1]
        # Filtered embedded defect, solved point by point.
        ze = np.einsum("j,pjm->pm", ERROR_WEIGHTS, Z) / h[:, None]
        filt = INV_A_REAL_EIG / h[:, None, None] * np.eye(m) - J
        est = np.linalg.solve(filt, (f0 + ze)[..., None])[..., 0]
        scale_new = self.atol + self.rtol * np.maximum(np.abs(u), np.abs(y1))
        err = wrms(est, scale_new, axis=1)

        refilter = rejected & (err > 1.0) & ok
        if refilter.any():
            idx = np.nonzero(refilter)[0]
            f_mid = self.f(u[idx] + est[idx])
            est2 = np.linalg.solve(filt[idx], (f_mid + ze[idx])[..., None])[..., 0]
            err[idx] = wrms(est2, scale_new[idx], axis=1)

        err = np.where(ok, err, np.inf)
        return y1, err, ok

    # -- full advance --------------------------------------------------------

    def advance(self, u0: np.ndarray, t0: float, dt: float) -> np.ndarray:
        """Integrate every point of ``u0`` (shape ``(P, m)``) over span ``dt``."""
        if dt < 0.0:
            raise ValueError("negative advance span")
        u = np.array(u0, dtype=float)
        if dt == 0.0:
            return u
        P = u.shape[0]
        t = np.zeros(P)
        h = np.full(P, dt)
        rejected = np.zeros(P, dtype=bool)
        steps = np.zeros(P, dtype=int)
        h_floor = 1e3 * _EPS * max(abs(t0), abs(t0 + dt), dt)
        active = np.ones(P, dtype=bool)

        while active.any():
            idx = np.nonzero(active)[0]
            h_try = np.minimum(h[idx], dt - t[idx])
            y1, err, newton_ok = self._attempt(u[idx], h_try, rejected[idx])
            steps[idx] += 1

            accept = err <= 1.0
            acc = idx[accept]
            u[acc] = y1[accept]
            t[acc] = t[acc] + h_try[accept]
            rejected[acc] = False
            # Doubling hysteresis: the estimate scales like h^4.
            grow = accept & (err <= 1.0 / 16.0)
            h[idx[grow]] = 2.0 * h_try[grow]
            h[idx[accept & ~grow]] = h_try[accept & ~grow]

            rej = ~accept
            h[idx[rej]] = 0.5 * h_try[rej]
            rejected[idx[rej]] = True

            bad = idx[rej & (h_try <= 2.0 * h_floor) & ~newton_ok]
            if bad.size:
                raise NewtonDivergence(
                    f"nonlinear stage solve stalled at the minimum internal step (point {bad[0]})"
                )
            under = idx[rej & (0.5 * h_try < h_floor)]
            if under.size:
                raise StepUnderflow(f"internal step below {h_floor:.3e} (point {under[0]})")
            over = idx[steps[idx] > self.max_internal_steps]
            if over.size:
                raise StepUnderflow(f"exceeded max_internal_steps={self.max_internal_steps}")

            active = t < dt * (1.0 - 4.0 * _EPS)

        return u
