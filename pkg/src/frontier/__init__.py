"""Frontier regression toolkit: boundary-curve estimation when errors sit
at an end-point of their distribution rather than at the mean.

Raw frontier levels come from small local linear programs, smoothed
variants repair their discontinuities, tail exponents come from the
smallest windowed residuals, and bandwidths from Monte-Carlo minimisation
of the extreme-value limit law's mean squared error.
"""

from ._accel import HAS_NUMBA, USE_NUMBA
from .auxiliary import CurvatureEstimate, DensityInfo, kde_density, local_cubic_second_derivative
from .errors import (
    DegenerateDenominator,
    DegenerateSpacings,
    EmptyNeighbourhood,
    EmptyWindow,
    FrontierError,
    MalformedRow,
    NumericalFailure,
    SingularDesign,
    TruncationSuspect,
)
from .estimators import (
    CurvePoint,
    Dataset,
    EstimatorConfig,
    LocalFit,
    ResidualSet,
    build_residual_set,
    estimate_curve,
    estimate_naive,
    estimate_tilde_a,
    expand_window,
    make_raw_fitter,
    residuals,
    smooth_check_a,
    smooth_hat_a,
    tilde_values_at,
)
from .io import load_csv, read_config, save_csv
from .kernels import (
    BallRegion,
    Kernel,
    biquadratic_kernel,
    full_ball,
    kernel_moment_kappa,
    quadrature_grid,
    sample_uniform_region,
    sphere_content,
    uniform_kernel,
)
from .limits import (
    BandwidthPlan,
    LimitContext,
    bandwidth_global,
    bandwidth_local,
    eval_Q1,
    rho0_search,
    sample_Q3,
    sample_Z,
    sample_Z_series,
    tau,
)
from .lp import LinearProgram, LpOutcome, solve_lp
from .simulation import (
    ComparisonResult,
    MetricsRow,
    MetricsTable,
    SimScenario,
    generate_dataset,
    model_frontier,
    run_comparison,
    run_mc_study,
    run_rate_study,
    sample_gamma_error,
    select_bandwidth,
    synthetic_utility,
    table_scenarios,
)
from .tail import TailParams, hill_estimate, select_r

__version__ = "0.1.0"
