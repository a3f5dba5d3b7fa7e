import numpy as np
import pytest

import dcsplit as d
from dcsplit.problems import ProblemSpec
from dcsplit.spatial import Grid1D, Laplacian1D, SplitRhs

from _oracles import rk4_brute


def pointwise_problem(f, jac, m, u0):
    """Minimal spec for a reaction-only pointwise system."""
    return ProblemSpec(
        name="pointwise", m=m, grid=None, params=None, spatial_order=None,
        rhs=SplitRhs(lambda t, u: np.zeros_like(u), lambda t, u: f(u.reshape(-1, m)).ravel(), m),
        initial_state=np.asarray(u0, dtype=float), window=(0, 1),
        reaction_f=f, reaction_jac=jac,
        diffusion_apply=lambda t, u: np.zeros_like(u), cfl_limit=np.inf,
        jac_banded=None,
    )


def linear_decay_problem(rate):
    return pointwise_problem(
        lambda U: -U / rate,
        lambda U: np.broadcast_to(-np.eye(1) / rate, (U.shape[0], 1, 1)),
        1,
        [1.0],
    )


class TestReactionPropagator:
    def test_zero_rhs_identity(self):
        prob = pointwise_problem(
            lambda U: np.zeros_like(U),
            lambda U: np.zeros((U.shape[0], 1, 1)),
            1, [0.7],
        )
        prop = d.reaction_propagator(prob, d.SubsolverConfig())
        out = prop.advance(prob.initial_state, 0.0, 0.5)
        np.testing.assert_array_equal(out, prob.initial_state)
        assert out is not prob.initial_state

    def test_zero_span_exact(self):
        prob = linear_decay_problem(1e-5)
        prop = d.reaction_propagator(prob, d.SubsolverConfig())
        out = prop.advance(prob.initial_state, 0.3, 0.0)
        np.testing.assert_array_equal(out, prob.initial_state)

    def test_stiff_linear_decay(self):
        # mu = 1e-5, dt = 1e-3: one hundred decay times, answer is ~0
        mu = 1e-5
        prob = linear_decay_problem(mu)
        cfg = d.SubsolverConfig(rtol=1e-8, atol=1e-12)
        prop = d.reaction_propagator(prob, cfg)
        out = prop.advance(prob.initial_state, 0.0, 1e-3)
        exact = np.exp(-1e-3 / mu)
        assert abs(out[0] - exact) <= cfg.rtol * abs(exact) + cfg.atol

    def test_mild_decay_accuracy(self):
        prob = linear_decay_problem(1.0)
        cfg = d.SubsolverConfig(rtol=1e-10, atol=1e-12)
        prop = d.reaction_propagator(prob, cfg)
        out = prop.advance(prob.initial_state, 0.0, 0.5)
        assert out[0] == pytest.approx(np.exp(-0.5), abs=5e-10)

    def test_bz_point_against_brute_force(self):
        params = d.BzParams()
        prob = pointwise_problem(
            lambda U: d.bz_reaction(params, U),
            lambda U: d.bz_reaction_jacobian(params, U),
            3, [0.1, 0.1, 0.1],
        )
        cfg = d.SubsolverConfig(rtol=1e-8, atol=1e-10)
        prop = d.reaction_propagator(prob, cfg, backend="python")
        out = prop.advance(prob.initial_state, 0.0, 1e-4)
        brute = rk4_brute(lambda u: d.bz_reaction(params, u), prob.initial_state, 1e-4, 100_000)
        np.testing.assert_allclose(out, brute, rtol=1e-6)

    def test_points_independent_of_batch(self):
        params = d.BzParams()
        prob = pointwise_problem(
            lambda U: d.bz_reaction(params, U),
            lambda U: d.bz_reaction_jacobian(params, U),
            3, [0.1, 0.1, 0.1],
        )
        cfg = d.SubsolverConfig(rtol=1e-6, atol=1e-8)
        prop = d.reaction_propagator(prob, cfg, backend="python")
        rng = np.random.default_rng(9)
        batch = rng.uniform(0.05, 0.9, size=(17, 3))
        together = prop.advance(batch.ravel(), 0.0, 5e-5).reshape(17, 3)
        for i in range(17):
            solo = prop.advance(batch[i].copy(), 0.0, 5e-5)
            np.testing.assert_array_equal(together[i], solo)

    def test_tolerance_tightening_reduces_error(self):
        prob = linear_decay_problem(1.0)
        errs = []
        for rtol in (1e-6, 1e-7):
            prop = d.reaction_propagator(prob, d.SubsolverConfig(rtol=rtol, atol=rtol * 1e-2))
            out = prop.advance(prob.initial_state, 0.0, 2.0)
            errs.append(abs(out[0] - np.exp(-2.0)))
        assert errs[1] <= errs[0] / 2.0

    def test_semigroup_consistency(self):
        prob = linear_decay_problem(1.0)
        cfg = d.SubsolverConfig(rtol=1e-9, atol=1e-11)
        prop = d.reaction_propagator(prob, cfg)
        h = 0.25
        two_steps = prop.advance(prop.advance(prob.initial_state, 0.0, h), h, h)
        one_step = prop.advance(prob.initial_state, 0.0, 2 * h)
        tol = 10 * (cfg.rtol * 1.0 + cfg.atol)
        assert abs(two_steps[0] - one_step[0]) <= tol


def heat_problem(n, order=2, diff=0.02):
    grid = Grid1D(n)
    lap = Laplacian1D(grid, order, [diff])
    return ProblemSpec(
        name="heat", m=1, grid=grid, params=None, spatial_order=order,
        rhs=SplitRhs(lambda t, u: lap.apply(u), lambda t, u: np.zeros_like(u), n),
        initial_state=np.cos(np.pi * grid.x), window=(0, 1),
        reaction_f=lambda U: np.zeros_like(U),
        reaction_jac=lambda U: np.zeros((U.shape[0], 1, 1)),
        diffusion_apply=lambda t, u: lap.apply(u), cfl_limit=lap.cfl_limit,
        jac_banded=None,
    )


class TestDiffusionPropagator:
    def test_zero_operator_identity(self):
        prob = pointwise_problem(lambda U: 0 * U, lambda U: np.zeros((U.shape[0], 1, 1)), 1, [2.0])
        prop = d.diffusion_propagator(prob, d.SubsolverConfig())
        out = prop.advance(prob.initial_state, 0.0, 0.7)
        np.testing.assert_array_equal(out, prob.initial_state)

    def test_fourier_mode_decay(self):
        # Neumann-compatible mode cos(pi x) decays by exp(-D pi^2 t)
        diff = 0.02
        prob = heat_problem(201, diff=diff)
        cfg = d.SubsolverConfig(rtol=1e-9, atol=1e-11)
        prop = d.diffusion_propagator(prob, cfg)
        dt = 0.5
        out = prop.advance(prob.initial_state, 0.0, dt)
        exact = np.exp(-diff * np.pi**2 * dt) * prob.initial_state
        # semi-discrete mode decays at the discrete eigenvalue; tolerance
        # covers the O(dx^2) gap to the continuous rate
        np.testing.assert_allclose(out, exact, atol=5e-4)

    def test_reflection_commutes(self):
        prob = heat_problem(101)
        cfg = d.SubsolverConfig(rtol=1e-10, atol=1e-12)
        prop = d.diffusion_propagator(prob, cfg)
        rng = np.random.default_rng(2)
        u = rng.standard_normal(101)
        a = prop.advance(u[::-1].copy(), 0.0, 0.01)[::-1]
        b = prop.advance(u, 0.0, 0.01)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_internal_step_respects_stability_cap(self):
        prob = heat_problem(101, diff=1.0)
        calls = []
        orig = prob.diffusion_apply

        def counting(t, u):
            calls.append(t)
            return orig(t, u)

        prob.diffusion_apply = counting
        prop = d.diffusion_propagator(prob, d.SubsolverConfig(rtol=1e-4, atol=1e-6))
        span = 50 * prob.cfl_limit
        prop.advance(prob.initial_state, 0.0, span)
        # at least span / cfl internal steps happened (6 stages + dense each)
        assert len(calls) >= 50

    def test_semigroup_consistency(self):
        prob = heat_problem(101)
        cfg = d.SubsolverConfig(rtol=1e-10, atol=1e-12)
        prop = d.diffusion_propagator(prob, cfg)
        u0 = prob.initial_state
        h = 0.1
        two = prop.advance(prop.advance(u0, 0.0, h), h, h)
        one = prop.advance(u0, 0.0, 2 * h)
        tol = 10 * (cfg.rtol * np.linalg.norm(u0) + cfg.atol)
        assert np.linalg.norm(two - one) <= tol


class TestConfig:
    def test_invalid_tolerances(self):
        with pytest.raises(ValueError):
            d.SubsolverConfig(rtol=0.0)
        with pytest.raises(ValueError):
            d.SubsolverConfig(atol=-1.0)

    def test_compiled_backend_requires_kernel(self):
        prob = linear_decay_problem(1.0)
        with pytest.raises(ValueError):
            d.reaction_propagator(prob, d.SubsolverConfig(), backend="compiled")
