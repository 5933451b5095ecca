"""Two-agent beacon-referenced constant-bearing pursuit in three dimensions.

Full configuration-space simulation (:mod:`.dynamics`), the steering law
(:mod:`.steering`), the reduced shape-space dynamics (:mod:`.shape`),
closed-form circling equilibria (:mod:`.equilibria`), trajectory analysis
(:mod:`.analysis`) and a command-line front end (:mod:`.cli`).
"""
from .analysis import CircleFit, CirclingReport, ComparisonReport, compare_representations, detect_circling, fit_circle_3d
from .config import PRESETS, RunConfig, initial_state, parse_config, preset_config
from .dynamics import TrajectoryRecord, integrate, state_derivative, step
from .equilibria import (
    EquilibriumSpec,
    all_equilibria,
    existence_table,
    extra_branch_residual,
    nullcline_rhs,
    prop1_equilibrium,
    prop2a_equilibrium,
    prop2b_equilibrium,
    residual_at,
)
from .errors import *  # noqa: F401,F403
from .geometry import Frame, complete_frame, orthonormality_error, renormalize, triangle_from_sides
from .rng import Xoshiro256
from .runner import RunSummary, SweepSettings, parameter_grid, run, sweep
from .shape import (
    SHAPE_FIELDS,
    ConstraintReport,
    EffectiveShape,
    constraint_residuals,
    effective_shape,
    embed_shape,
    integrate_shape,
    shape_rhs,
    xtilde_candidates,
    xtilde_candidates_closed_form,
)
from .state import AgentState, WorldState
from .steering import (
    ControlParams,
    SteeringInput,
    beacon_component,
    cb_component,
    control,
    full_shape_vars,
    lateral_acceleration,
    steering_inputs,
)

__version__ = "0.1.0"
