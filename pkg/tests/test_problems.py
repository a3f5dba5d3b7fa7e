import numpy as np
import pytest

import dcsplit as d
from dcsplit.problems import bz_seed_state, front_position

from _oracles import central_fd_jacobian, exact_flow


class TestBzReaction:
    def test_zero_state(self):
        p = d.BzParams()
        np.testing.assert_array_equal(d.bz_reaction(p, np.zeros(3)), np.zeros(3))

    def test_hand_values_at_ones(self):
        p = d.BzParams()
        da, db, dc = d.bz_reaction(p, np.ones(3))
        assert da == pytest.approx((-2e-3 - 1.0 + 1.6) / 1e-5)  # 5.98e4
        assert db == pytest.approx((2e-3 - 1.0 + 0.0) / 1e-2)  # -99.8
        assert dc == 0.0

    def test_jacobian_matches_central_differences(self):
        p = d.BzParams()
        rng = np.random.default_rng(42)
        for _ in range(20):
            state = rng.uniform(0.01, 1.0, size=3)
            J = d.bz_reaction_jacobian(p, state)
            J_fd = central_fd_jacobian(lambda u: d.bz_reaction(p, u), state)
            np.testing.assert_allclose(J, J_fd, rtol=1e-6, atol=1e-4)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            d.BzParams(mu=0.1, eps=0.01)  # violates mu < eps
        with pytest.raises(ValueError):
            d.BzParams(f=-1.0)

    def test_stiffness_scale_at_front(self, bz201):
        # spectral radius of the reaction Jacobian along the profile is
        # dominated by the 1/mu rows
        p = bz201.params
        U = bz201.initial_state.reshape(-1, 3)
        J = d.bz_reaction_jacobian(p, U)
        rho = np.max(np.abs(np.linalg.eigvals(J)))
        assert rho > 0.1 / p.mu

    def test_split_decomposition_exact(self, bz201):
        rng = np.random.default_rng(1)
        u = rng.uniform(0.01, 1.0, bz201.size)
        total = bz201.rhs.apply(0.0, u)
        parts = bz201.rhs.diffusion(0.0, u) + bz201.rhs.reaction(0.0, u)
        np.testing.assert_array_equal(total, parts)


class TestBzProblem:
    def test_rest_state_is_equilibrium(self):
        p = d.BzParams()
        rest = np.array(p.rest_state)
        np.testing.assert_allclose(d.bz_reaction(p, rest), 0.0, atol=1e-10)

    def test_seed_shape(self):
        p = d.BzParams()
        g = d.Grid1D(101)
        seed = bz_seed_state(p, g).reshape(101, 3)
        assert seed[0, 1] == 1.0
        assert seed[-1, 1] == pytest.approx(p.rest_state[1])

    def test_spun_up_state_single_front(self, bz201):
        crossings = front_position(bz201.grid, bz201.initial_state)
        assert len(crossings) == 1
        assert 0.15 < crossings[0] < 0.35

    def test_species_bounds_along_trajectory(self, bz101, u_half_101):
        # excitable medium: b stays within [0, 1.1]; a and c positive with
        # numerical slop
        for state in u_half_101:
            U = state.reshape(-1, 3)
            assert U[:, 1].min() > -1e-6 and U[:, 1].max() < 1.1
            assert U.min() > -1e-6

    def test_front_advances_monotonically(self, bz101, u_half_101):
        # track the leading edge until it leaves through the right wall
        # (the crossing count drops once the front exits)
        fronts = []
        prev_count = None
        for state in u_half_101:
            cr = front_position(bz101.grid, state)
            if prev_count is not None and len(cr) < prev_count:
                break
            if cr:
                fronts.append(max(cr))
                prev_count = len(cr)
        assert len(fronts) >= 4
        diffs = np.diff(fronts)
        assert np.all(diffs > 0)
        # near-constant speed: spacing uniform to 25%
        assert diffs.max() < 1.25 * diffs.min()


@pytest.fixture(scope="session")
def u_half_101(bz101):
    """Checkpoints of the 101-point reference trajectory over [0.5, 1.0]."""
    cfg = d.ReferenceConfig(rtol=1e-8, atol=1e-10)
    marks = list(np.linspace(0.5, 1.0, 6))
    traj = d.reference_solve(bz101, cfg, 0.0, 1.0, bz101.initial_state, checkpoints=marks[:-1] + [1.0])
    return [traj.state_at(t) for t in marks]


class TestLinearProblems:
    def test_dahlquist_exact_flow(self):
        prob = d.dahlquist_problem(-1.0)
        cfg = d.ReferenceConfig(rtol=1e-12, atol=1e-14)
        traj = d.reference_solve(prob, cfg, 0.0, 1.0, prob.initial_state)
        assert traj.states[-1][0] == pytest.approx(np.exp(-1.0), abs=1e-10)

    def test_linear2x2_noncommuting(self):
        prob = d.linear2x2_problem()
        M1, M2 = prob.params["M1"], prob.params["M2"]
        assert np.any(M1 @ M2 != M2 @ M1)

    def test_linear2x2_split_parts(self):
        prob = d.linear2x2_problem()
        u = np.array([0.3, -1.2])
        np.testing.assert_array_equal(prob.rhs.diffusion(0.0, u), prob.params["M1"] @ u)
        np.testing.assert_array_equal(prob.rhs.reaction(0.0, u), prob.params["M2"] @ u)

    def test_exact_flow_oracle_consistency(self):
        # sanity of the test oracle itself on the analytic 2x2 flow
        prob = d.linear2x2_problem()
        M = prob.params["M1"] + prob.params["M2"]
        t = 0.7
        # for M = [[0,1],[1,0]]: expm(Mt) = [[cosh t, sinh t], [sinh t, cosh t]]
        expect = np.array([[np.cosh(t), np.sinh(t)], [np.sinh(t), np.cosh(t)]]) @ prob.initial_state
        np.testing.assert_allclose(exact_flow(M, t, prob.initial_state), expect, rtol=1e-14)
