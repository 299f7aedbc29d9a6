"""Stabilisation of regime-switching diffusions by sampled, delayed feedback.

Design math (admissible sampling intervals and lags, guaranteed decay rates)
plus an Euler-Maruyama simulator and Monte Carlo estimators to check it.
"""

from .chain import (
    GeneratorMatrix,
    ModePath,
    sample_path,
    skeleton_transition_matrix,
    stationary_distribution,
    validate_generator,
)
from .designer import (
    ControlGains,
    DesignReport,
    Family,
    NonlinearBounds,
    QuasiLinearBounds,
    Scenario,
    beta_eval,
    design_nl_stable,
    design_nl_stable_p_ge_theta,
    design_ql_bounded,
    design_ql_stable,
    design_ql_unbounded,
    design_ql_unstable,
    moment_exponent_ladder,
    solve_threshold,
    verify_assumptions,
)
from .estimator import (
    EnsembleStats,
    estimate_as_exponent,
    estimate_ms_exponent,
    integral_moment,
    occupation_check,
    run_ensemble,
)
from .models import FunctionModel, PolynomialModel, SwitchingModel, Term, two_mode_model
from .simulator import ControlLaw, SimConfig, Trajectory, nu, simulate_controlled, simulate_uncontrolled
from .spectral import Variant, eta, kappa, tau_bar, zeta

__version__ = "0.1.0"
