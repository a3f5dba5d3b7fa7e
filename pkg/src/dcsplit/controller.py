"""Error estimation and adaptive time-step selection.

After each sweep the companion quadrature solution (the b-weighted step built
from the current node values) is compared against the last node.  The decay
of that gap from sweep to sweep measures the per-sweep, per-unit-step
contraction factor; its running product turns the distance between the
corrected and the initial node into an estimate of the true local error.
Three step rules are derived from the estimate: hold the iteration count,
aim for the iteration cap, or adapt the plain splitting step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .dcs import DcsState, DcsSweeper
from .errors import StepUnderflow
from .splitting import SplittingScheme
from .subsolvers import SubsolverConfig
from .tableau import full_step_increment

__all__ = [
    "DegenerateEstimate",
    "EstimatorBlowup",
    "ErrorNorm",
    "SweepRecord",
    "ControllerConfig",
    "StepReport",
    "companion_solution",
    "estimate_error",
    "next_dt",
    "split_dt",
    "predict_restart",
    "RestartDecision",
    "default_k_max",
    "adaptive_integrate",
]

_EPS = float(np.finfo(float).eps)


class DegenerateEstimate(RuntimeError):
    """Previous sweep gap is at the rounding floor; contraction is undefined."""


class EstimatorBlowup(RuntimeError):
    """Contraction estimate at or beyond 1: the step exceeds the contraction radius."""


class ErrorNorm:
    """State-space error norm, optionally scaled by the first species' amplitude.

    ``scaled-l2`` is the RMS norm divided by the max-norm of species 0 of the
    reference state; ``max`` is the plain max norm.
    """

    def __init__(self, kind: str = "scaled-l2", m: int = 1):
        if kind not in ("scaled-l2", "max"):
            raise ValueError(f"unknown norm kind {kind!r}")
        self.kind = kind
        self.m = m

    def __call__(self, v: np.ndarray, ref_state: np.ndarray | None = None) -> float:
        v = np.asarray(v, dtype=float)
        if self.kind == "max":
            return float(np.max(np.abs(v)))
        rms = float(np.sqrt(np.mean(v * v)))
        if ref_state is None:
            return rms
        first = np.asarray(ref_state).reshape(-1, self.m)[:, 0]
        scale = float(np.max(np.abs(first)))
        return rms / scale if scale > 0.0 else rms


@dataclass(frozen=True)
class SweepRecord:
    """Estimator bookkeeping after sweep ``k`` of one step."""

    k: int
    err_bar: float
    err_tilde: float
    dt: float
    zeta_tilde: float | None = None
    sigma_tilde: float | None = None
    dt_max_k: float | None = None
    diff_from_initial: float = 0.0


@dataclass(frozen=True)
class ControllerConfig:
    """Accuracy targets and step clamps for the adaptive loop.

    ``rule`` picks the step-size formula: "k" holds the used iteration count,
    "kmax" aims for the iteration cap, "split" adapts a plain splitting step
    (no corrections), and "composite" (default) takes the most conservative of
    the first two together with the contraction-radius cap.
    """

    eta: float = 1e-7
    eta_split: float | None = None
    nu: float = 0.9
    k_max: int = 3
    dt_min: float = 1e-12
    dt_max_abs: float = 1.0
    norm: str = "scaled-l2"
    rule: str = "composite"
    max_rejections: int = 10

    def __post_init__(self):
        if not 0.0 < self.nu <= 1.0:
            raise ValueError("safety factor must be in (0, 1]")
        if self.k_max < 0:
            raise ValueError("k_max must be nonnegative")
        if not self.dt_min < self.dt_max_abs:
            raise ValueError("dt_min must be below dt_max_abs")
        if self.rule not in ("k", "kmax", "split", "composite"):
            raise ValueError(f"unknown step rule {self.rule!r}")

    @property
    def split_tol(self) -> float:
        return self.eta if self.eta_split is None else self.eta_split


def default_k_max(scheme: SplittingScheme, tableau) -> int:
    """Iteration cap min(p - p_hat, q - p_hat + 1) of the estimator's validity."""
    return min(tableau.p - scheme.order_hat, tableau.q - scheme.order_hat + 1)


def companion_solution(state: DcsState) -> np.ndarray:
    """Full-step quadrature solution built from the current node RHS values."""
    return state.u0 + full_step_increment(state.tableau, state.u_tilde)


def _advance_estimates(k: int, err_bar: float, prev: SweepRecord | None, dt: float,
                       diff_from_initial: float, floor: float) -> SweepRecord:
    """Pure estimator arithmetic shared by :func:`estimate_error`."""
    if k == 0:
        return SweepRecord(k=0, err_bar=err_bar, err_tilde=err_bar, dt=dt,
                           diff_from_initial=0.0)
    if prev is None or prev.k != k - 1:
        raise ValueError("history must contain the record of sweep k - 1")
    if prev.err_bar <= floor:
        raise DegenerateEstimate(
            f"sweep {k - 1} gap {prev.err_bar:.3e} is at the rounding floor"
        )
    zeta = (err_bar / prev.err_bar) / dt
    sigma = zeta if prev.sigma_tilde is None else prev.sigma_tilde * zeta
    contraction = sigma * dt**k
    if contraction >= 1.0:
        raise EstimatorBlowup(
            f"contraction estimate {contraction:.3e} >= 1 at sweep {k}; reduce the step"
        )
    err_tilde = contraction / (1.0 - contraction) * diff_from_initial
    return SweepRecord(k=k, err_bar=err_bar, err_tilde=err_tilde, dt=dt,
                       zeta_tilde=zeta, sigma_tilde=sigma,
                       dt_max_k=1.0 / zeta if zeta > 0.0 else math.inf,
                       diff_from_initial=diff_from_initial)


def estimate_error(history: list[SweepRecord], state: DcsState, u_tilde0_s: np.ndarray,
                   norm: ErrorNorm, scale_state: np.ndarray | None = None) -> SweepRecord:
    """Estimator update after sweep ``state.k``.

    ``u_tilde0_s`` is the last node of the initial sweep of this step;
    ``history`` holds the records of sweeps ``0 .. k-1``.
    """
    ref = scale_state if scale_state is not None else state.u0
    err_bar = norm(companion_solution(state) - state.end_value, ref)
    prev = history[-1] if history else None
    floor = 10.0 * _EPS * max(norm(state.u0, ref), 1e-300)
    diff = norm(state.end_value - u_tilde0_s, ref) if state.k >= 1 else 0.0
    return _advance_estimates(state.k, err_bar, prev, state.dt, diff, floor)


def _bracket(record: SweepRecord, eta: float) -> float:
    contraction = record.sigma_tilde * record.dt**record.k
    return (1.0 - contraction) * record.err_tilde + contraction * eta


def next_dt(record: SweepRecord, cfg: ControllerConfig, *, k_max: int | None = None,
            p_hat: int | None = None) -> float:
    """New step from an accepted or rejected sweep record.

    For records with ``k >= 1`` the rule-dependent candidates are combined;
    a ``k = 0`` record falls back to the splitting-step rule and needs
    ``p_hat``.
    """
    k_max = cfg.k_max if k_max is None else k_max
    if record.k == 0:
        if p_hat is None:
            raise ValueError("a k = 0 record needs the splitting order p_hat")
        return _clamp(cfg.nu * _split_dt_raw(record.err_tilde, cfg, p_hat, record.dt), cfg)
    dt, k = record.dt, record.k
    denom = _bracket(record, cfg.eta)
    candidates = []
    with np.errstate(divide="ignore", over="ignore"):
        dt_k = (cfg.eta / denom) ** (1.0 / k) * dt if denom > 0.0 else math.inf
        zeta = record.zeta_tilde
        dt_kmax = (
            (cfg.eta / denom) ** (1.0 / k_max) * zeta ** (-(k_max - k) / k_max) * dt ** (k / k_max)
            if denom > 0.0 and zeta > 0.0
            else math.inf
        )
    if cfg.rule in ("k", "composite"):
        candidates.append(dt_k)
    if cfg.rule in ("kmax", "composite"):
        candidates.append(dt_kmax)
    if cfg.rule == "split":
        candidates.append(dt_k)  # degenerate use; the split rule is driven elsewhere
    candidates.append(record.dt_max_k if record.dt_max_k is not None else math.inf)
    return _clamp(cfg.nu * min(candidates), cfg)


def split_dt(err0: float, cfg: ControllerConfig, scheme: SplittingScheme, dt: float) -> float:
    """Splitting-step rule from the measured splitting error of one step."""
    return _clamp(cfg.nu * _split_dt_raw(err0, cfg, scheme.order_hat, dt), cfg)


def _split_dt_raw(err0: float, cfg: ControllerConfig, p_hat: int, dt: float) -> float:
    if err0 <= 0.0:
        return math.inf
    return (cfg.split_tol / err0) ** (1.0 / (p_hat + 1)) * dt


def _clamp(dt: float, cfg: ControllerConfig) -> float:
    if not math.isfinite(dt):
        return cfg.dt_max_abs
    return min(max(dt, cfg.dt_min), cfg.dt_max_abs)


@dataclass(frozen=True)
class RestartDecision:
    restart: bool
    new_dt: float | None = None
    predicted: float | None = None


def predict_restart(record: SweepRecord, cfg: ControllerConfig,
                    prev_sigma_kmax: float | None = None,
                    prev_dt: float | None = None, *,
                    k_max: int | None = None) -> RestartDecision:
    """Predict the estimate after the iteration cap; restart early if hopeless.

    At ``k = 0`` the prediction scales the cap-level contraction of the
    previous step; on the very first step there is no history and the policy
    is to continue.
    """
    k_max = cfg.k_max if k_max is None else k_max
    k, dt = record.k, record.dt
    if k >= k_max:
        raise ValueError("prediction only applies before the iteration cap")
    if k == 0:
        if prev_sigma_kmax is None or prev_dt is None:
            return RestartDecision(restart=False)
        if dt > prev_dt:
            # The cap-level contraction scaling is wildly pessimistic for a
            # grown step; let the first sweep measure the real contraction.
            return RestartDecision(restart=False)
        sigma_star = prev_sigma_kmax * (dt / prev_dt) ** k_max
        predicted = sigma_star * dt**k_max * record.err_tilde
        if predicted > cfg.eta and sigma_star > 0.0 and record.err_tilde > 0.0:
            new_dt = cfg.nu * (cfg.eta / (sigma_star * record.err_tilde)) ** (1.0 / k_max)
            return RestartDecision(True, _clamp(new_dt, cfg), predicted)
        return RestartDecision(False, predicted=predicted)
    zeta = record.zeta_tilde
    predicted = (zeta * dt) ** (k_max - k) * record.err_tilde
    if predicted > cfg.eta:
        new_dt = cfg.nu * (cfg.eta / (zeta ** (k_max - k) * record.err_tilde)) ** (1.0 / k_max) * dt ** (k / k_max)
        return RestartDecision(True, _clamp(new_dt, cfg), predicted)
    return RestartDecision(False, predicted=predicted)


@dataclass
class StepReport:
    """Per-step controller diagnostics."""

    t: float
    dt: float
    k_used: int
    err_bar: list
    err_tilde: list
    zeta: list
    accepted: bool
    restarts: int
    wall_ns: int

    def csv_cells(self, k_max: int) -> list:
        def pad(vals, n, offset=0):
            out = [f"{v:.17g}" for v in vals]
            return out + [""] * (n - len(out) + offset)

        return (
            [f"{self.t:.17g}", f"{self.dt:.17g}", str(self.k_used)]
            + pad(self.err_bar, k_max + 1)
            + pad(self.err_tilde, k_max + 1)
            + pad(self.zeta, k_max)
            + [str(int(self.accepted)), str(self.restarts), str(self.wall_ns)]
        )

    @staticmethod
    def csv_columns(k_max: int) -> list:
        cols = ["t", "dt", "k_used"]
        cols += [f"err_bar_{k}" for k in range(k_max + 1)]
        cols += [f"err_tilde_{k}" for k in range(k_max + 1)]
        cols += [f"zeta_{k}" for k in range(1, k_max + 1)]
        cols += ["accepted", "restarts", "wall_ns"]
        return cols


def _sigma_at_cap(records: list[SweepRecord], k_max: int) -> float | None:
    """Cap-level contraction product extrapolated from the deepest sweep."""
    last = records[-1]
    if last.k == 0 or last.zeta_tilde is None or last.zeta_tilde <= 0.0:
        return None
    return last.zeta_tilde ** (k_max - last.k) * last.sigma_tilde


def adaptive_integrate(problem, scheme: SplittingScheme, cfg: ControllerConfig,
                       t0: float, tf: float, u0: np.ndarray, dt0: float, *,
                       subsolver_cfg: SubsolverConfig | None = None,
                       sweeper: DcsSweeper | None = None,
                       backend: str = "auto",
                       checkpoints=None):
    """March from ``t0`` to ``tf`` with sweeps-until-converged steps.

    Returns ``(trajectory, reports)`` where ``trajectory`` is a list of
    ``(t, state)`` pairs at accepted steps (plus requested checkpoint
    landings, hit exactly by step truncation) and ``reports`` one
    :class:`StepReport` per attempted step.
    """
    if not tf > t0:
        raise ValueError("tf must exceed t0")
    if dt0 <= 0.0:
        raise ValueError("dt0 must be positive")
    if sweeper is None:
        sweeper = DcsSweeper.for_problem(problem, scheme, subsolver_cfg, backend=backend)
    if sweeper.hybrid:
        raise ValueError(
            "error-controlled stepping is undefined in hybrid spatial mode: "
            "time and space errors no longer decompose; run fixed-step sweeps instead"
        )
    norm = ErrorNorm(cfg.norm, m=problem.m)
    marks = sorted({float(tc) for tc in (checkpoints or [])} | {float(tf)})
    if any(tc <= t0 or tc > tf + 1e-12 for tc in marks):
        raise ValueError("checkpoints must lie inside (t0, tf]")

    u = np.asarray(u0, dtype=float).copy()
    t = t0
    dt = _clamp(dt0, cfg)
    trajectory = [(t0, u.copy())]
    reports: list[StepReport] = []
    prev_sigma_kmax = None
    prev_dt = None
    use_corrections = cfg.rule != "split"

    for mark in marks:
        while t < mark - 1e-14 * max(1.0, abs(mark)):
            dt_step = min(dt, mark - t)
            rejections = 0
            while True:
                started = time.perf_counter_ns()
                state = sweeper.initial_sweep(u, t, dt_step)
                u_init_end = state.end_value.copy()
                records = [estimate_error([], state, u_init_end, norm, scale_state=u)]
                accepted = None
                proposed_restart = None
                failure = None
                while True:
                    rec = records[-1]
                    if rec.err_tilde <= cfg.eta:
                        accepted = rec
                        break
                    if not use_corrections or rec.k >= cfg.k_max:
                        break
                    if rec.k < cfg.k_max:
                        try:
                            decision = predict_restart(rec, cfg, prev_sigma_kmax, prev_dt)
                        except ValueError:
                            decision = RestartDecision(False)
                        if decision.restart:
                            proposed_restart = decision.new_dt
                            break
                    state = sweeper.correction_sweep(state)
                    try:
                        records.append(
                            estimate_error(records, state, u_init_end, norm, scale_state=u)
                        )
                    except DegenerateEstimate:
                        # Converged to the rounding floor: accept on the previous record.
                        if records[-1].err_tilde <= cfg.eta:
                            accepted = records[-1]
                        else:
                            failure = "degenerate"
                        break
                    except EstimatorBlowup:
                        failure = "blowup"
                        break

                wall = time.perf_counter_ns() - started
                rec = records[-1]
                reports.append(
                    StepReport(
                        t=t,
                        dt=dt_step,
                        k_used=rec.k,
                        err_bar=[r.err_bar for r in records],
                        err_tilde=[r.err_tilde for r in records],
                        zeta=[r.zeta_tilde for r in records if r.zeta_tilde is not None],
                        accepted=accepted is not None,
                        restarts=rejections,
                        wall_ns=wall,
                    )
                )

                if accepted is not None:
                    u = state.end_value.copy()
                    t = t + dt_step
                    trajectory.append((t, u.copy()))
                    sig = _sigma_at_cap(records, cfg.k_max)
                    if sig is not None:
                        prev_sigma_kmax, prev_dt = sig, dt_step
                    if accepted.k >= 1 and cfg.rule != "split":
                        dt = next_dt(accepted, cfg)
                    else:
                        dt = split_dt(records[0].err_tilde, cfg, scheme, dt_step)
                    break

                rejections += 1
                if rejections > cfg.max_rejections:
                    raise StepUnderflow(
                        f"{rejections} consecutive rejections at t={t}; last dt={dt_step:.3e}"
                    )
                if proposed_restart is not None:
                    dt_new = proposed_restart
                elif failure == "blowup":
                    dt_new = 0.5 * dt_step
                elif failure == "degenerate":
                    dt_new = 0.5 * dt_step
                elif rec.k >= 1:
                    dt_new = next_dt(rec, cfg)
                else:
                    dt_new = split_dt(rec.err_tilde, cfg, scheme, dt_step)
                dt_new = min(dt_new, 0.9 * dt_step)  # a rejected step must shrink
                if dt_new < cfg.dt_min:
                    raise StepUnderflow(f"step below dt_min={cfg.dt_min} at t={t}")
                dt = dt_step = dt_new
        t = mark
    return trajectory, reports
