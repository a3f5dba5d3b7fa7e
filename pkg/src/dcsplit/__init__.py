"""Deferred-correction operator splitting for stiff semi-discrete PDEs.

Low-order Lie/Strang splitting passes over the nodes of a Radau IIA
collocation quadrature are corrected sweep by sweep toward the high-order
quadrature solution, with error estimation and adaptive step selection built
on the measured per-sweep contraction.
"""

from .controller import (
    ControllerConfig,
    DegenerateEstimate,
    ErrorNorm,
    EstimatorBlowup,
    StepReport,
    SweepRecord,
    adaptive_integrate,
    companion_solution,
    estimate_error,
    next_dt,
    predict_restart,
    split_dt,
)
from .dcs import DcsState, DcsSweeper
from .errors import NewtonDivergence, StepUnderflow
from .problems import (
    BzParams,
    ProblemSpec,
    bz_problem,
    bz_reaction,
    bz_reaction_jacobian,
    dahlquist_problem,
    front_position,
    linear2x2_problem,
)
from .reference import ReferenceConfig, ReferenceTrajectory, reference_solve
from .spatial import Grid1D, Laplacian1D, SplitRhs, laplacian
from .splitting import LIE, STRANG, SplittingScheme, splitting_step
from .subsolvers import (
    Propagator,
    SubsolverConfig,
    compiled_kernel_available,
    diffusion_propagator,
    reaction_propagator,
)
from .tableau import ButcherTableau, StageSet, full_step_increment, radau_iia_3, stage_increment

__version__ = "0.1.0"
