"""camplab: complex approximate message passing, state evolution and the
analytic curves of complex sparse recovery."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ChiPair,
    SoftThresholdJacobian,
    chi1,
    chi2,
    chi_pair,
    eta_zero_risk,
    soft_risk,
    soft_threshold,
    soft_threshold_jacobian,
)
from .errors import (  # noqa: E402
    AbovePhaseTransitionError,
    CampLabError,
    ConfigError,
    DomainError,
    NumericalFailure,
    OnBoundaryError,
    SizeCapError,
)
from .state_evolution import (  # noqa: E402
    AmplitudeDistribution,
    SEParams,
    SETrajectory,
    convergence_bound,
    mse_map,
    mse_map_derivative_at_zero,
    se_fixed_point,
    se_trajectory,
)
from .analysis import (  # noqa: E402
    calibrate_lambda,
    minimax_risk,
    noise_sensitivity,
    phase_transition,
    phase_transition_asymptote,
    phase_transition_parametric,
    rho_mse,
    rho_of_tau_delta,
)
from .solvers import (  # noqa: E402
    CampOptions,
    ProblemInstance,
    SolverResult,
    camp_solve,
    classo_objective,
    estimate_npi,
    fista_classo,
    full_message_passing,
)
from .ensembles import make_instance, sample_matrix, sample_noise, sample_signal  # noqa: E402
