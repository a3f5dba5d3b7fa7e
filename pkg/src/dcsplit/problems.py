"""Problem definitions: the BZ reaction-diffusion benchmark and small linear
test problems with analytically known flows.

Every problem carries the split right-hand side, pointwise reaction hooks for
the implicit subsolver, the linear diffusion hook for the explicit subsolver,
and a banded coupled Jacobian for the fully implicit reference solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .spatial import Grid1D, Laplacian1D, SplitRhs

__all__ = [
    "BzParams",
    "ProblemSpec",
    "bz_reaction",
    "bz_reaction_jacobian",
    "bz_seed_state",
    "bz_problem",
    "linear2x2_problem",
    "dahlquist_problem",
    "front_position",
]


@dataclass(frozen=True)
class BzParams:
    """Three-species BZ kinetics constants and diffusion coefficients.

    The small quotient parameter is named ``q_bz`` to keep it apart from the
    stage order of the quadrature tableau.
    """

    eps: float = 1e-2
    mu: float = 1e-5
    f: float = 1.6
    q_bz: float = 2e-3
    Da: float = 2.5e-3
    Db: float = 2.5e-3
    Dc: float = 1.5e-3

    def __post_init__(self):
        if not (0.0 < self.mu < self.eps < 1.0):
            raise ValueError("time-scale separation requires 0 < mu < eps < 1")
        if min(self.f, self.q_bz, self.Da, self.Db, self.Dc) <= 0.0:
            raise ValueError("all BZ parameters must be positive")

    @property
    def rest_state(self) -> tuple[float, float, float]:
        """Stable spatially homogeneous equilibrium (a*, b*, c*) of the kinetics.

        b* is the positive root of b^2 + (q + f - 1) b - q (1 + f) = 0,
        c* = b*, a* = f b* / (q + b*).
        """
        q, f = self.q_bz, self.f
        half = (q + f - 1.0) / 2.0
        b = -half + math.sqrt(half * half + q * (1.0 + f))
        a = f * b / (q + b)
        return a, b, b

    @property
    def diff_coeffs(self) -> np.ndarray:
        return np.array([self.Da, self.Db, self.Dc])


def bz_reaction(params: BzParams, state: np.ndarray) -> np.ndarray:
    """Pointwise reaction rates; ``state[..., :]`` holds (a, b, c)."""
    a = state[..., 0]
    b = state[..., 1]
    c = state[..., 2]
    out = np.empty_like(state)
    out[..., 0] = (-params.q_bz * a - a * b + params.f * c) / params.mu
    out[..., 1] = (params.q_bz * a - a * b + b * (1.0 - b)) / params.eps
    out[..., 2] = b - c
    return out


def bz_reaction_jacobian(params: BzParams, state: np.ndarray) -> np.ndarray:
    """Closed-form 3x3 reaction Jacobian at each point, shape ``(..., 3, 3)``."""
    a = state[..., 0]
    b = state[..., 1]
    J = np.zeros(state.shape[:-1] + (3, 3))
    inv_mu = 1.0 / params.mu
    inv_eps = 1.0 / params.eps
    J[..., 0, 0] = (-params.q_bz - b) * inv_mu
    J[..., 0, 1] = -a * inv_mu
    J[..., 0, 2] = params.f * inv_mu
    J[..., 1, 0] = (params.q_bz - b) * inv_eps
    J[..., 1, 1] = (-a + 1.0 - 2.0 * b) * inv_eps
    J[..., 2, 1] = 1.0
    J[..., 2, 2] = -1.0
    return J


@dataclass
class ProblemSpec:
    """A semi-discrete problem with its splitting decomposition.

    ``initial_state`` is flat and point-major (reshape to ``(n_points, m)``).
    ``reaction_f``/``reaction_jac`` act on point batches of shape ``(P, m)``;
    ``diffusion_apply`` is the linear sub-operator; ``jac_banded`` returns the
    coupled Jacobian in LAPACK band storage as ``(l, u, ab)``.
    """

    name: str
    m: int
    grid: Grid1D | None
    params: object
    spatial_order: int | None
    rhs: SplitRhs
    initial_state: np.ndarray
    window: tuple[float, float]
    reaction_f: callable
    reaction_jac: callable
    diffusion_apply: callable
    cfl_limit: float
    jac_banded: callable
    kernel_tag: str | None = None
    kernel_params: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return self.grid.n if self.grid is not None else 1

    @property
    def size(self) -> int:
        return self.n_points * self.m

    def with_initial_state(self, state: np.ndarray) -> "ProblemSpec":
        return replace(self, initial_state=np.asarray(state, dtype=float).copy())


def _dense_as_banded(M: np.ndarray) -> tuple[int, int, np.ndarray]:
    n = M.shape[0]
    l = u = n - 1
    ab = np.zeros((l + u + 1, n))
    for o in range(-l, u + 1):
        j = np.arange(max(0, -o), n - max(0, o))
        ab[u + o, j] = M[j + o, j]
    return l, u, ab


def _bz_jac_banded_factory(params: BzParams, lap: Laplacian1D):
    n, m = lap.grid.n, 3
    half = lap.stencil_reach * m
    size = n * m
    # The diffusion part is constant: assemble it once.
    ab_diff = np.zeros((2 * half + 1, size))
    for sp in range(m):
        for op, dvals in lap.species_diagonals(sp).items():
            rows = np.arange(max(0, -op), n - max(0, op))
            cols = (rows + op) * m + sp
            ab_diff[half - op * m, cols] = dvals[rows]

    def jac_banded(t: float, u: np.ndarray) -> tuple[int, int, np.ndarray]:
        ab = ab_diff.copy()
        Jr = bz_reaction_jacobian(params, u.reshape(n, m))
        base = np.arange(n) * m
        for alpha in range(m):
            for beta in range(m):
                ab[half + alpha - beta, base + beta] += Jr[:, alpha, beta]
        return half, half, ab

    return jac_banded


def bz_seed_state(params: BzParams, grid: Grid1D, seed_width: float = 0.05) -> np.ndarray:
    """Pre-spin-up seed: excited b-plateau near the left wall, rest state elsewhere.

    The homogeneous rest state is the ambient; seeding on top of the literal
    quiescent constants would ignite the whole domain instead of launching a
    front.
    """
    a0, b0, c0 = params.rest_state
    U = np.empty((grid.n, 3))
    U[:, 0] = a0
    U[:, 1] = np.where(grid.x <= seed_width, 1.0, b0)
    U[:, 2] = c0
    return U.ravel()


def _bz_spec(n: int, spatial_order: int, params: BzParams, window) -> ProblemSpec:
    grid = Grid1D(n)
    lap = Laplacian1D(grid, spatial_order, params.diff_coeffs)

    def diffusion_part(t, u):
        return lap.apply(u)

    def reaction_part(t, u):
        return bz_reaction(params, u.reshape(n, 3)).ravel()

    rhs = SplitRhs(diffusion_part, reaction_part, n * 3)
    return ProblemSpec(
        name="bz",
        m=3,
        grid=grid,
        params=params,
        spatial_order=spatial_order,
        rhs=rhs,
        initial_state=bz_seed_state(params, grid),
        window=tuple(window),
        reaction_f=lambda U: bz_reaction(params, U),
        reaction_jac=lambda U: bz_reaction_jacobian(params, U),
        diffusion_apply=diffusion_part,
        cfl_limit=lap.cfl_limit,
        jac_banded=_bz_jac_banded_factory(params, lap),
        kernel_tag="bz",
        kernel_params=(params.eps, params.mu, params.f, params.q_bz),
        meta={"n": n, "spatial_order": spatial_order},
    )


_SPUN_UP_CACHE: dict[tuple, np.ndarray] = {}


def bz_problem(
    n: int,
    spatial_order: int = 2,
    window: tuple[float, float] = (0.5, 0.6),
    *,
    params: BzParams | None = None,
    spin_up: float = 0.25,
    seed_width: float = 0.05,
    spin_rtol: float = 1e-10,
    spin_atol: float = 1e-12,
) -> ProblemSpec:
    """Developed-wave BZ problem on ``n`` points over [0, 1].

    The seed plateau is integrated with the reference solver for ``spin_up``
    time units, long enough that a single rightward front has detached from
    the wall (one b = 0.5 crossing) but short of the trailing back forming.
    The spun-up state defines problem time zero.
    """
    params = params or BzParams()
    spec = _bz_spec(n, spatial_order, params, window)
    spec.meta.update(
        {"spin_up": spin_up, "seed_width": seed_width, "spin_rtol": spin_rtol, "spin_atol": spin_atol}
    )
    key = (n, spatial_order, params, spin_up, seed_width, spin_rtol, spin_atol)
    if key not in _SPUN_UP_CACHE:
        if spin_up > 0.0:
            from .reference import ReferenceConfig, reference_solve

            seed = bz_seed_state(params, spec.grid, seed_width)
            cfg = ReferenceConfig(rtol=spin_rtol, atol=spin_atol)
            traj = reference_solve(spec.with_initial_state(seed), cfg, 0.0, spin_up, seed)
            _SPUN_UP_CACHE[key] = traj.states[-1]
        else:
            _SPUN_UP_CACHE[key] = bz_seed_state(params, spec.grid, seed_width)
    return spec.with_initial_state(_SPUN_UP_CACHE[key])


def front_position(grid: Grid1D, state: np.ndarray, species: int = 1, level: float = 0.5):
    """x-positions where the given species crosses ``level``, left to right."""
    prof = state.reshape(grid.n, -1)[:, species]
    sgn = prof - level
    idx = np.nonzero(sgn[:-1] * sgn[1:] < 0.0)[0]
    x = grid.x
    out = []
    for i in idx:
        frac = sgn[i] / (prof[i] - prof[i + 1])
        out.append(float(x[i] + frac * (x[i + 1] - x[i])))
    return out


def _linear_problem(name: str, M1: np.ndarray, M2: np.ndarray, u0, window) -> ProblemSpec:
    M1 = np.asarray(M1, dtype=float)
    M2 = np.asarray(M2, dtype=float)
    m = M1.shape[0]
    u0 = np.atleast_1d(np.asarray(u0, dtype=float))

    def diffusion_part(t, u):
        return M1 @ u

    def reaction_part(t, u):
        return M2 @ u

    rhs = SplitRhs(diffusion_part, reaction_part, m)
    full = M1 + M2
    return ProblemSpec(
        name=name,
        m=m,
        grid=None,
        params={"M1": M1, "M2": M2},
        spatial_order=None,
        rhs=rhs,
        initial_state=u0,
        window=tuple(window),
        reaction_f=lambda U: U @ M2.T,
        reaction_jac=lambda U: np.broadcast_to(M2, (U.shape[0], m, m)),
        diffusion_apply=diffusion_part,
        cfl_limit=np.inf,
        jac_banded=lambda t, u: _dense_as_banded(full),
    )


def linear2x2_problem(u0=(1.0, 0.7), window=(0.0, 1.0)) -> ProblemSpec:
    """Noncommuting linear 2x2 system split into its strict triangular parts.

    The commutator of the parts is nonzero, so every splitting scheme shows
    its full local error order on this problem.
    """
    M1 = np.array([[0.0, 1.0], [0.0, 0.0]])
    M2 = np.array([[0.0, 0.0], [1.0, 0.0]])
    return _linear_problem("linear2x2", M1, M2, u0, window)


def dahlquist_problem(lam: float = -1.0, u0: float = 1.0, window=(0.0, 1.0)) -> ProblemSpec:
    """Scalar decay split into two commuting halves (zero splitting error)."""
    M = np.array([[lam]])
    spec = _linear_problem("dahlquist", 0.5 * M, 0.5 * M, [u0], window)
    spec.params = {"lam": lam}
    return spec
