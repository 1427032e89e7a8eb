"""Calabi-symmetric special Lagrangian multi-sections: level sets, construction data,
stability walls, momentum curve flow and split Fano bundle branches."""

from .bundles import (
    BundleParams,
    PolyP,
    arg_monotonicity,
    boundary_intersections,
    bundle_charge_arg,
    lifted_angle_bundle,
    poly_P,
    rescale_to_unit,
    vertical_branch_thetas,
)
from .construction import (
    ConstructionParams,
    construct,
    construct_from_p,
    find_admissible_k,
    p_from_theta,
    rationality_scan,
    solve_critical_data,
    solve_kahler_param,
    theta_from_p,
    verify_same_component,
)
from .errors import CalabiSlagError
from .flow import (
    FlowConfig,
    FlowState,
    SymplecticPotentialProfile,
    critical_point_tracker,
    curve_flow_step,
    profile_flow_step,
    stable_relaxation_experiment,
    stationarity_residual,
    unstable_limit_experiment,
)
from .levelset import (
    Branch,
    HarmonicLevelSet,
    MomentumProfile,
    eval_F,
    lifted_angle,
    split_graphical,
    trace_all,
    trace_component,
)
from .stability import (
    DivisorClass,
    KahlerClassBlowup,
    Verdict,
    central_charge,
    classify_locus,
    intersection_product,
    slope_derivative_at_wall,
    surrogate_charge,
    z_slope,
)

__version__ = "0.1.0"
