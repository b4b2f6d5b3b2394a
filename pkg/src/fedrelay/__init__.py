"""Equilibrium solver for the joint learning-service pricing and
cooperative-relay game between mobile devices (leaders) and a model
owner (follower)."""

from .lower_level import (
    accuracy,
    best_response_demand,
    concavity_certificate,
    owner_utility,
    price_floor,
)
from .radio import (
    PowerLimitError,
    min_power_for_rate,
    transmission_energy_cost,
    transmission_rate,
    transmission_rates,
)
from .routing import (
    check_acyclic_reach,
    check_ap_connected,
    check_single_link,
    check_timing,
    feasible,
    indicator_from_powers,
    routing_lines,
)
from .scenario import (
    AccuracyModel,
    DeviceParams,
    RandomSpec,
    Scenario,
    ScenarioError,
    build_channel_matrix,
    load_scenario,
    paper9_scenario,
    random_scenario,
    save_scenario,
)
from .upper_level import (
    EquilibriumReport,
    PenaltyConfig,
    StrategyProfile,
    best_response_dynamics,
    device_profit,
    penalized_profit,
    penalty_rho,
    price_best_response,
    reduced_profit,
    relay_power_best_response,
    solve_stackelberg,
)

__version__ = "0.1.0"
