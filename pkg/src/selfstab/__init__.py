"""Simulation and analysis of self-stabilizing jump processes driven by plane Poisson sets."""

__version__ = "0.1.0"

from .alpha_model import (  # noqa: E402
    AlphaModel, derivative_ratio_bound, eval_alpha, figure_model, signed_power,
    stable_norm_constant, stable_norm_constant_closed, y_weight_ab,
)
from .analysis import (  # noqa: E402
    HolderFit, LocalizationReport, holder_constant, holder_estimate, holder_fit, ks_distance,
    localization_experiment,
)
from .errors import *  # noqa: E402,F401,F403
from .point_process import PointSet, StripSpec, generate_poisson_strip, load_points, min_x_gap, save_points  # noqa: E402
from .simulate import (  # noqa: E402
    SampledPath, TruncationPlan, expectation_bound, planning_bound, simulate_batch, simulate_path,
    simulate_stable_motion, simulate_subordinator, simulate_tempered, simulate_weighted,
    small_jump_cutoff, truncation_level,
)
from .solver import (  # noqa: E402
    JumpFunction, contraction_sum, solve_nonautonomous, solve_picard, solve_sequential,
    solve_truncated, solve_weighted, truncation_error_bound,
)
from .stable import cms_stable_sample, normalized_motion_scale, poisson_sum_scale  # noqa: E402
