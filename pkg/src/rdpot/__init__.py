"""Rate-distortion-perception functions via entropic optimal transport."""

from .probability import (
    Channel,
    CostMatrix,
    Coupling,
    Distribution,
    SupportGrid,
    entropy,
    expected_distortion,
    hamming_matrix,
    kl_divergence,
    marginal,
    mutual_information,
    squared_error_matrix,
    tv_distance,
    zero_pad,
)
from .transport import TransportSolution, solve_transport, wasserstein
from .rdp import (
    DualState,
    RdpProblem,
    ResidualReport,
    SolverConfig,
    SolverResult,
    kkt_residuals,
    newton_eta,
    newton_gamma,
    newton_lambda,
    solve_rdp_kl,
    solve_rdp_tv,
    solve_rdp_wasserstein,
)
from .drp import DrpProblem, solve_drp
from .baselines import (
    GaussianSpec,
    binary_rdp_closed_form,
    binary_transition_f,
    binary_upper_h,
    discretize_gaussian,
    gaussian_rdp_closed_form,
    gaussian_transition_f,
    gaussian_upper_h,
)
from .transitions import (
    CurveSample,
    TransitionPoint,
    detect_transition_point,
    endpoint_identity_check,
    n_letter_rate,
    transition_curve_via_rd,
    upper_bound_h,
)

__version__ = "0.1.0"
