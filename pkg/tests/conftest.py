import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import dcsplit as d


@pytest.fixture(scope="session")
def tab():
    return d.radau_iia_3()


@pytest.fixture(scope="session")
def bz201():
    """Desk-scale developed-wave BZ problem (2nd-order space)."""
    return d.bz_problem(201)


@pytest.fixture(scope="session")
def bz201_high():
    """Order-4 operators on the same grid; shares no spin-up of its own."""
    return d.bz_problem(201, spatial_order=4, spin_up=0.0)


@pytest.fixture(scope="session")
def u_half(bz201):
    """Reference state at t = 0.5 (start of the desk window)."""
    cfg = d.ReferenceConfig(rtol=1e-11, atol=1e-13)
    return d.reference_solve(bz201, cfg, 0.0, 0.5, bz201.initial_state).states[-1]


@pytest.fixture(scope="session")
def bz101():
    """Smaller grid for cheap qualitative checks."""
    return d.bz_problem(101)


def bz_local_reference(problem, u0, t0, dts, rtol=1e-12):
    """Reference endpoint states at t0 + dt for each dt (one adaptive solve)."""
    cfg = d.ReferenceConfig(rtol=rtol, atol=rtol * 1e-2)
    marks = sorted({t0 + dt for dt in dts})
    traj = d.reference_solve(problem.with_initial_state(u0), cfg, t0, max(marks), u0,
                             checkpoints=marks)
    return {dt: traj.state_at(t0 + dt) for dt in dts}
