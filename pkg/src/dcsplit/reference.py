"""Fully coupled high-accuracy reference integrator.

A 3-stage Radau IIA collocation method applied to the unsplit semi-discrete
system, with simplified Newton on the full stage system.  The stage matrix
``I - h (A kron J)`` is assembled and factorized in LAPACK band storage with
stage-innermost unknown ordering, so its bandwidth stays proportional to the
spatial stencil reach.  Checkpoints are hit exactly by truncating the last
step of each segment; there is no dense-output interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .errors import NewtonDivergence, StepUnderflow
from .stiffstep import ERROR_WEIGHTS, INV_A_REAL_EIG, RADAU_A, RADAU_C, newton_tolerance, wrms

__all__ = ["ReferenceConfig", "ReferenceTrajectory", "reference_solve"]

_EPS = float(np.finfo(float).eps)
_MIN_FACTOR = 0.2
_MAX_FACTOR = 8.0
_SAFETY = 0.9


@dataclass(frozen=True)
class ReferenceConfig:
    rtol: float = 1e-12
    atol: float = 1e-12
    newton_tol: float | None = None
    newton_max_iters: int = 10
    jacobian: str = "analytic-banded"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.jacobian not in ("analytic-banded", "finite-difference"):
            raise ValueError(f"unknown jacobian mode {self.jacobian!r}")


@dataclass
class ReferenceTrajectory:
    times: list
    states: list

    def state_at(self, t: float) -> np.ndarray:
        for ti, ui in zip(self.times, self.states):
            if abs(ti - t) <= 1e-12 * max(1.0, abs(t)):
                return ui
        raise KeyError(f"no checkpoint stored at t={t}")

    def save_csv(self, path: str, m: int) -> None:
        from .artifacts import save_trajectory_csv

        save_trajectory_csv(path, self.times, self.states, m)


def _fd_jac_banded(rhs_apply, t, u, l, up):
    """Banded finite-difference Jacobian using stride-spaced column groups."""
    n = u.size
    ab = np.zeros((l + up + 1, n))
    f0 = rhs_apply(t, u)
    stride = l + up + 1
    for g in range(min(stride, n)):
        cols = np.arange(g, n, stride)
        du = np.zeros(n)
        h = np.sqrt(_EPS) * np.maximum(np.abs(u[cols]), 1e-8)
        du[cols] = h
        df = (rhs_apply(t, u + du) - f0)
        for j, hj in zip(cols, h):
            rows = np.arange(max(0, j - up), min(n, j + l + 1))
            ab[up + rows - j, j] = df[rows] / hj
    return l, up, ab


class _BandedStageSystem:
    """Band-stored stage matrix ``I - h (A kron J)`` and its LU factors."""

    def __init__(self, jac_l, jac_u, ab_j, h):
        s = 3
        n = ab_j.shape[1]
        self.s = s
        self.n = n
        self.l = jac_l * s + (s - 1)
        self.u = jac_u * s + (s - 1)
        nn = n * s
        # Extra l rows on top: LAPACK gbtrf works in expanded storage.
        ab = np.zeros((2 * self.l + self.u + 1, nn))
        rows0 = self.l + self.u  # row index of the main diagonal in expanded storage
        for d in range(-jac_l, jac_u + 1):
            diag = ab_j[jac_u + d]
            cols = np.arange(max(0, -d), n - max(0, d))
            vals = diag[cols]
            for li in range(s):
                for lj in range(s):
                    off = d * s + (li - lj)
                    cc = cols * s + lj
                    ab[rows0 + off, cc] = -h * RADAU_A[li, lj] * vals
        ab[rows0, :] += 1.0
        gbtrf, gbtrs = get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        lu, piv, info = gbtrf(ab, self.l, self.u)
        if info != 0:
            raise np.linalg.LinAlgError(f"banded LU factorization failed (info={info})")
        self._lu, self._piv, self._gbtrs = lu, piv, gbtrs

    def solve(self, r_stages: np.ndarray) -> np.ndarray:
        """Solve for stage increments; ``r_stages`` has shape (s, n)."""
        flat = np.ascontiguousarray(r_stages.T).ravel()
        x, info = self._gbtrs(self._lu, self.l, self.u, flat, self._piv)
        if info != 0:
            raise np.linalg.LinAlgError(f"banded solve failed (info={info})")
        return x.reshape(self.n, self.s).T


class _BandedFilter:
    """Band LU of ``gamma/h I - J`` for the stiffly damped error estimate."""

    def __init__(self, jac_l, jac_u, ab_j, h):
        n = ab_j.shape[1]
        self.l, self.u = jac_l, jac_u
        ab = np.zeros((2 * jac_l + jac_u + 1, n))
        ab[jac_l : 2 * jac_l + jac_u + 1, :] = -ab_j
        ab[jac_l + jac_u, :] += INV_A_REAL_EIG / h
        gbtrf, gbtrs = get_lapack_funcs(("gbtrf", "gbtrs"), (ab,))
        lu, piv, info = gbtrf(ab, jac_l, jac_u)
        if info != 0:
            raise np.linalg.LinAlgError(f"filter factorization failed (info={info})")
        self._lu, self._piv, self._gbtrs = lu, piv, gbtrs

    def solve(self, r: np.ndarray) -> np.ndarray:
        x, info = self._gbtrs(self._lu, self.l, self.u, r, self._piv)
        if info != 0:
            raise np.linalg.LinAlgError(f"filter solve failed (info={info})")
        return x


def _initial_step(rhs_apply, t0, u0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(u0)
    d0 = wrms(u0, scale)
    d1 = wrms(f0, scale)
    h0 = 1e-6 * span if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    u1 = u0 + h0 * f0
    f1 = rhs_apply(t0 + h0, u1)
    d2 = wrms(f1 - f0, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 4.0)
    return min(100 * h0, h1, span)


def reference_solve(problem, cfg: ReferenceConfig, t0: float, tf: float, u0: np.ndarray,
                    checkpoints=None) -> ReferenceTrajectory:
    """Integrate the fully coupled system from ``t0`` to ``tf``.

    ``checkpoints`` are interior times to land on exactly (by step
    truncation); the endpoint is always stored.
    """
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    u = np.asarray(u0, dtype=float).copy()
    rhs_apply = problem.rhs.apply
    if cfg.jacobian == "analytic-banded":
        jac_banded = problem.jac_banded
    else:
        l_u = problem.jac_banded(t0, u)[:2]

        def jac_banded(t, y, _l=l_u[0], _u=l_u[1]):
            return _fd_jac_banded(rhs_apply, t, y, _l, _u)

    newton_tol = newton_tolerance(cfg.rtol, cfg.newton_tol)
    marks = sorted({float(tc) for tc in (checkpoints or [])} | {float(tf)})
    if any(tc <= t0 or tc > tf + 1e-12 for tc in marks):
        raise ValueError("checkpoints must lie inside (t0, tf]")

    traj = ReferenceTrajectory(times=[t0], states=[u.copy()])
    t = t0
    f0 = rhs_apply(t, u)
    h = _initial_step(rhs_apply, t, u, f0, cfg.rtol, cfg.atol, tf - t0)
    jl, ju, abj = jac_banded(t, u)
    jac_fresh = True
    stage_sys = filt = None
    h_factored = None
    err_old = h_old = None
    nsteps = 0

    for mark in marks:
        while t < mark - 1e-14 * max(1.0, abs(mark)):
            h = min(h, mark - t)
            h_min = 1e3 * _EPS * max(abs(t), abs(mark))
            if h < h_min:
                raise StepUnderflow(f"reference step underflow at t={t}")
            nsteps += 1
            if nsteps > cfg.max_steps:
                raise StepUnderflow(f"exceeded max_steps={cfg.max_steps}")

            if stage_sys is None or h_factored is None or abs(h - h_factored) > 0.2 * h_factored:
                stage_sys = _BandedStageSystem(jl, ju, abj, h)
                filt = _BandedFilter(jl, ju, abj, h)
                h_factored = h

            # Simplified Newton on the stage values.
            scale = cfg.atol + cfg.rtol * np.abs(u)
            U = np.tile(u, (3, 1))
            converged = False
            rate = None
            dz_old = None
            for _ in range(cfg.newton_max_iters):
                F = np.stack([rhs_apply(t + RADAU_C[j] * h, U[j]) for j in range(3)])
                R = u[None, :] + h * (RADAU_A @ F.reshape(3, -1)).reshape(3, -1) - U
                if not np.all(np.isfinite(R)):
                    break
                delta = stage_sys.solve(R)
                U += delta
                dz = wrms(delta, scale[None, :])
                if dz_old is not None and dz_old > 0:
                    rate = dz / dz_old
                    if rate >= 1.0:
                        break
                if dz <= newton_tol or (
                    rate is not None and rate / (1.0 - rate) * dz <= newton_tol
                ):
                    converged = True
                    break
                dz_old = dz
            if not converged:
                if not jac_fresh:
                    jl, ju, abj = jac_banded(t, u)
                    jac_fresh = True
                    stage_sys = filt = None
                    continue
                if h <= 2.0 * h_min:
                    raise NewtonDivergence(f"stage solve stalled at t={t}")
                h *= 0.5
                stage_sys = filt = None
                continue

            y1 = U[2]
            Z = U - u[None, :]
            ze = (ERROR_WEIGHTS @ Z.reshape(3, -1)) / h
            est = filt.solve(f0 + ze)
            scale_e = cfg.atol + cfg.rtol * np.maximum(np.abs(u), np.abs(y1))
            err = wrms(est, scale_e)
            if err >= 1.0:
                est = filt.solve(rhs_apply(t, u + est) + ze)
                err = wrms(est, scale_e)

            if err < 1.0:
                # Accept; two-step growth factor as in classical stiff codes.
                if err == 0.0:
                    fac = _MAX_FACTOR
                else:
                    multiplier = 1.0
                    if err_old is not None and h_old is not None:
                        multiplier = (h / h_old) * (err_old / err) ** 0.25
                    fac = _SAFETY * min(1.0, multiplier) * err**-0.25
                err_old, h_old = max(err, 1e-10), h
                t += h
                u = y1
                f0 = rhs_apply(t, u)
                refresh = rate is not None and rate > 1e-3
                grow = min(_MAX_FACTOR, max(_MIN_FACTOR, fac))
                h = h * grow
                if refresh:
                    jl, ju, abj = jac_banded(t, u)
                    jac_fresh = True
                    stage_sys = filt = None
                else:
                    jac_fresh = False
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err ** -0.25)
                stage_sys = filt = None

        traj.times.append(mark)
        traj.states.append(u.copy())
        t = mark
    return traj
