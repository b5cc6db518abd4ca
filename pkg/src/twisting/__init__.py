"""Prescribed-time gain tuning, simulation and verification for the twisting controller."""

from .dynamics import (
    TABLE1_PENDULUM,
    DisturbanceKind,
    DisturbanceProfile,
    PendulumParams,
    State,
    compensating_torque,
    double_integrator_rhs,
    evaluate_disturbance,
    lyapunov_v,
    pendulum_rhs,
    twisting_control,
)
from .sim import (
    LevelSetReport,
    Plant,
    SimConfig,
    SimulationError,
    Trajectory,
    level_set_monitor,
    settling_time,
    simulate,
)
from .tuning import (
    PENDULUM_GAINS,
    PENDULUM_TUNING,
    GainError,
    Gains,
    ParameterError,
    SettlingEstimate,
    TuningParameters,
    ValidationReport,
    mu1_lower_bound,
    mu2_lower_bound,
    settling_estimate,
    synthesize_gains,
    validate_gains,
    validate_parameters,
)

__version__ = "0.1.0"
