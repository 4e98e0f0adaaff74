"""Numerical laboratory for the damped focusing cubic wave equation.

Ground state and well constants, the K+/K- classifier, a dissipation-exact
Strang integrator with an energy ledger, and diagnostics for the
dichotomy, invariance, blow-up and stabilization behaviour of

    u_tt + gamma(x) u_t + (-Lap + beta) u = u^3

with Dirichlet conditions on an interval or a radial 3D ball.
"""

from .domain import (
    Domain,
    DomainSpec,
    Geometry,
    ball_domain,
    build_domain,
    interval_domain,
    random_field,
)
from .dynamics import (
    Cause,
    DampingKind,
    DampingProfile,
    EnergyLedger,
    State,
    StepReport,
    Stepper,
    Trajectory,
    evolve,
    linear_propagator,
    make_state,
    scaled_covariance_check,
    step,
)
from .functionals import (
    BoundCheck,
    Classification,
    EnergyTriple,
    Lemma12Report,
    Verdict,
    WellConstants,
    classify,
    energies,
    explicit_sobolev_check,
    lambda_star,
    lemma12_bounds,
    well_curve,
    with_delta,
    x_pm,
)
from .ground_state import (
    GroundState,
    certify_well_constants,
    ground_state_from_record,
    ground_state_record,
    load_ground_state,
    nehari_project,
    petviashvili_solve,
    save_ground_state,
    shooting_oracle,
)
from .diagnostics import (
    DecayFit,
    Equilibrium,
    EquilibriumReport,
    LyapunovReport,
    ObservabilityReport,
    VirialReport,
    VirialSample,
    detect_equilibrium,
    fit_decay,
    gcc_check_1d,
    lyapunov_eps,
    observability_ratio,
    virial_series,
)
from .scenario import (
    CheckResult,
    RunReport,
    ScenarioConfig,
    config_to_dict,
    load_config,
    parse_config,
    run_scenario,
    save_config,
)
from . import errors

__version__ = "0.1.0"
