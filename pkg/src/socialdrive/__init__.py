"""2D driving simulation with a receding-horizon planner that can imitate
low-variance behavior of surrounding traffic."""

from .dynamics import CarState, ControlInput, DynamicsParams, rollout, step, wrap_angle
from .features import (
    EnvironmentSnapshot,
    ExitLane,
    RewardParams,
    RoadLayout,
    nominal_reward,
    phi,
)
from .planner import MpcController, PlanResult, PlannerConfig, PlanningError, gradient, plan
from .scenarios import (
    OutcomeMetrics,
    Scenario,
    SimulationResult,
    build_scenario,
    control_deviation,
    noise_sweep,
    simulate,
)
from .social import (
    GroupConfig,
    GroupStatistics,
    NormalizationConstants,
    SocialFeatureVector,
    SocialSample,
    assign_groups,
    cohesion_penalty,
    cohesive_reward,
    compute_psi,
    update_statistics,
)

__version__ = "0.1.0"

__all__ = [
    "CarState",
    "ControlInput",
    "DynamicsParams",
    "EnvironmentSnapshot",
    "ExitLane",
    "GroupConfig",
    "GroupStatistics",
    "MpcController",
    "NormalizationConstants",
    "OutcomeMetrics",
    "PlanResult",
    "PlannerConfig",
    "PlanningError",
    "RewardParams",
    "RoadLayout",
    "Scenario",
    "SimulationResult",
    "SocialFeatureVector",
    "SocialSample",
    "assign_groups",
    "build_scenario",
    "cohesion_penalty",
    "cohesive_reward",
    "compute_psi",
    "control_deviation",
    "gradient",
    "noise_sweep",
    "nominal_reward",
    "phi",
    "plan",
    "rollout",
    "simulate",
    "step",
    "update_statistics",
    "wrap_angle",
]
