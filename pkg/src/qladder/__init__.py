"""Quality-ladder growth models: exogenous and density-dependent ladders,
endogenous support via Bellman equations, and the branching random walk
with selection together with its front-velocity theory."""

__version__ = "0.1.0"

from .analysis import (
    CutoffFrontResult,
    FrontProfile,
    SpeedProfile,
    cutoff_front_velocity,
    cutoff_shape,
    estimate_front_profile,
    estimate_velocity,
    find_gamma_c,
    fit_decay_slope,
    predict_L0,
    predict_N0,
    predict_vL,
    predict_vN,
    speed_function,
)
from .bellman import (
    EconomicParams,
    ValueSolution,
    delta_v,
    long_run_distribution,
    solve_leapfrog_imitation,
    solve_leapfrog_only,
    support_size_invariance_check,
)
from .brw import BRWParams, KeepTopN, ParticleState, TrajectoryRecord, WindowL, cull, evolve_step, run, run_replicas
from .density import DensityModelConfig, StationarySolution, iterate_density, solve_stationary_density, step_density
from .errors import *  # noqa: F401,F403
from .ladder import (
    LadderConfig,
    build_transition,
    power_iterate,
    second_eigenvalue,
    second_eigenvalue_modulus,
    stationary_exogenous,
    step_exogenous,
)
