"""Device-side subgame: profits under the substituted demand response,
exterior-point penalty, per-device best responses, and the round-robin
dynamics that assemble the bilevel equilibrium.

Each device's strategy is a triple (price, relay target, transmit
power). Prices enter profit separably and have a closed-form optimum;
relay and power choices interact through interference, relay fees, and
arrival deadlines, and are handled by discrete enumeration over targets
with the deadline-matching minimal power per target. Constraint
violations are priced into the objective via an increasing schedule of
penalty coefficients, so infeasible strategies are dominated once the
coefficient is large.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import lower_level, radio, routing
from .scenario import Scenario, build_channel_matrix, price_floor

logger = logging.getLogger(__name__)

DEFAULT_M_SCHEDULE = tuple(10.0**k for k in range(1, 9))

# strategy-change tolerances for the convergence test
_Q_TOL = 1e-10
_P_TOL = 1e-10
# relative bump on deadline-matching rates so met deadlines hold strictly
_TIMING_SAFETY = 1e-9


@dataclass(frozen=True)
class PenaltyConfig:
    """Exterior-penalty settings.

    m_schedule: strictly increasing positive penalty coefficients.
    hinge: penalize only violations (squared); the False setting keeps
        the raw signed slack form of the connection and deadline terms,
        which rewards slack and exists for comparison runs only.
    eps_feas: slack allowed when declaring a constraint satisfied.
    """

    m_schedule: tuple[float, ...] = DEFAULT_M_SCHEDULE
    hinge: bool = True
    eps_feas: float = 1e-9

    def __post_init__(self):
        ms = tuple(float(m) for m in self.m_schedule)
        object.__setattr__(self, "m_schedule", ms)
        if not ms or any(m <= 0 for m in ms):
            raise ValueError("m_schedule must be nonempty and positive")
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ValueError("m_schedule must be strictly increasing")


@dataclass
class StrategyProfile:
    """Joint device strategy: prices plus one (target, power) link each."""

    prices: np.ndarray
    targets: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        self.prices = np.asarray(self.prices, dtype=float)
        self.targets = np.asarray(self.targets, dtype=int)
        self.powers = np.asarray(self.powers, dtype=float)
        n = len(self.prices)
        if len(self.targets) != n or len(self.powers) != n:
            raise ValueError("prices, targets, powers must have equal length")
        if np.any(self.targets == np.arange(n)):
            raise ValueError("a device cannot relay through itself")

    def copy(self) -> "StrategyProfile":
        return StrategyProfile(self.prices.copy(), self.targets.copy(), self.powers.copy())

    def power_matrix(self, n_nodes: int) -> np.ndarray:
        return routing.power_matrix(self.targets, self.powers, n_nodes)

    def indicator(self, n_nodes: int) -> np.ndarray:
        return routing.indicator_from_powers(self.power_matrix(n_nodes))


@dataclass
class EquilibriumReport:
    """Converged profile with the follower response and diagnostics."""

    prices: np.ndarray
    targets: np.ndarray
    powers: np.ndarray
    demand: np.ndarray
    rates: np.ndarray
    profits: np.ndarray
    owner_utility: float
    converged: bool
    iterations: int
    max_unilateral_gain: float
    feasible: bool
    violations: list
    order_robust: bool | None = None

    def profile(self) -> StrategyProfile:
        return StrategyProfile(self.prices.copy(), self.targets.copy(), self.powers.copy())

    def to_dict(self) -> dict:
        n = len(self.prices)
        return {
            "prices": self.prices.tolist(),
            "targets": self.targets.tolist(),
            "powers": self.powers.tolist(),
            "demand": self.demand.tolist(),
            "rates": self.rates.tolist(),
            "profits": self.profits.tolist(),
            "owner_utility": self.owner_utility,
            "routing": routing.routing_adjacency(self.targets, n),
            "converged": self.converged,
            "iterations": self.iterations,
            "max_unilateral_gain": self.max_unilateral_gain,
            "feasible": self.feasible,
            "violations": self.violations,
            "order_robust": self.order_robust,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EquilibriumReport":
        return cls(
            prices=np.asarray(data["prices"], dtype=float),
            targets=np.asarray(data["targets"], dtype=int),
            powers=np.asarray(data["powers"], dtype=float),
            demand=np.asarray(data["demand"], dtype=float),
            rates=np.asarray(data["rates"], dtype=float),
            profits=np.asarray(data["profits"], dtype=float),
            owner_utility=float(data["owner_utility"]),
            converged=bool(data["converged"]),
            iterations=int(data["iterations"]),
            max_unilateral_gain=float(data["max_unilateral_gain"]),
            feasible=bool(data["feasible"]),
            violations=list(data["violations"]),
            order_robust=data.get("order_robust"),
        )


def device_profit(
    i: int,
    profile: StrategyProfile,
    demand: np.ndarray,
    scen: Scenario,
    rates: np.ndarray | None = None,
    H: np.ndarray | None = None,
) -> float:
    """Profit of device i: data revenue, minus transmission energy and
    processing costs, plus relay-service revenue, minus the relay fee
    when not transmitting directly."""
    if H is None:
        H = build_channel_matrix(scen)
    if rates is None:
        rates = radio.transmission_rates(profile.targets, profile.powers, H, scen)
    I = profile.indicator(scen.n_nodes)
    return _profit_terms(i, profile.prices, profile.powers, demand, rates, I, scen)


def _profit_terms(i, prices, powers, demand, rates, I, scen) -> float:
    n, ap = scen.n_devices, scen.ap
    d = scen.devices[i]
    revenue = prices[i] * demand[i]
    energy = radio.transmission_energy_cost(i, powers, rates, scen)
    processing = d.c_p * demand[i]
    relay_revenue = scen.c_a * float(I[:n, i].sum())
    relay_fee = scen.c_a * (1.0 - float(I[i, ap]))
    return float(revenue - energy - processing + relay_revenue - relay_fee)


def reduced_profit(
    i: int, profile: StrategyProfile, scen: Scenario, H: np.ndarray | None = None
) -> float:
    """Profit with the owner's demand response substituted in."""
    demand = lower_level.best_response_demand(profile.prices, scen)
    return device_profit(i, profile, demand, scen, H=H)


def penalty_rho(
    i: int,
    I: np.ndarray,
    demand: np.ndarray,
    rates: np.ndarray,
    scen: Scenario,
    hinge: bool = True,
) -> float:
    """Constraint penalty for device i; 0 exactly when all constraints hold.

    Terms: own out-degree, own self-loop, global chain-termination
    defect, global access-point connection, own arrival deadline. Under
    hinge semantics the last two penalize violations squared; the
    non-hinge form keeps them as raw signed slacks.
    """
    I = np.asarray(I)
    n, ap = scen.n_devices, scen.ap
    row = I[i]
    rho = -float(row.sum() - 1) ** 2
    rho -= float(I[i, i]) ** 2
    rho -= routing.reach_defect(I)
    ap_links = float(I[:n, ap].sum())
    if hinge:
        rho -= max(0.0, 1.0 - ap_links) ** 2
        rho -= max(0.0, _own_timing_violation(i, I, demand, rates, scen)) ** 2
    else:
        rho += ap_links - 1.0
        T_s = routing.processing_times(demand, scen)
        inflow = float(I[:n, i].sum())
        rho += (
            float(I[i, :n] @ T_s)
            - T_s[i]
            - scen.devices[i].T_a * inflow
            - scen.I_d / float(rates[i])
        )
    return rho


def _own_timing_violation(i, I, demand, rates, scen) -> float:
    """Deadline violation of device i alone; 0 for direct transmitters
    and for rows that are not single-link (structural terms cover those)."""
    n, ap = scen.n_devices, scen.ap
    row = I[i]
    if row.sum() != 1 or row[ap] == 1 or row[i] == 1:
        return 0.0
    j = int(np.argmax(row))
    if not rates[i] > 0:
        return 0.0
    T_s = routing.processing_times(demand, scen)
    inflow = float(I[:n, i].sum())
    return float(T_s[i] + scen.devices[i].T_a * inflow + scen.I_d / rates[i] - T_s[j])


def penalized_profit(
    i: int,
    profile: StrategyProfile,
    M: float,
    scen: Scenario,
    hinge: bool = True,
    H: np.ndarray | None = None,
) -> float:
    """Reduced profit plus M times the constraint penalty."""
    if M <= 0:
        raise ValueError(f"penalty coefficient must be > 0, got {M}")
    if H is None:
        H = build_channel_matrix(scen)
    demand = lower_level.best_response_demand(profile.prices, scen)
    value, _ = _value(i, profile.prices, profile.targets, profile.powers, demand, scen, M, H, hinge)
    return value


def _value(i, prices, targets, powers, demand, scen, M, H, hinge) -> tuple[float, float]:
    """Penalized profit of device i at an explicit demand iterate."""
    P = routing.power_matrix(targets, powers, scen.n_nodes)
    I = routing.indicator_from_powers(P)
    rates = radio.rates_from_matrix(P, H, scen)
    profit = _profit_terms(i, prices, powers, demand, rates, I, scen)
    rho = penalty_rho(i, I, demand, rates, scen, hinge)
    return profit + M * rho, rho


def price_best_response(i: int, scen: Scenario) -> float:
    """Profit-maximizing price for device i, clamped to its price domain.

    The price-dependent profit (q - c_p) * ln(c*b/q) / c is strictly
    concave with a unique stationary point in (c_p, c*b); bisection on
    the derivative pins it down. A device whose processing cost exceeds
    c*b has no profitable price; it gets the demand-zeroing price.
    """
    d = scen.devices[i]
    cb = d.accuracy.c * d.accuracy.b
    q_lo, q_hi = price_floor(scen), d.q_max
    if d.c_p >= cb:
        logger.warning(
            "device %d is degenerate (c_p=%g >= c*b=%g); pricing demand to zero", i, d.c_p, cb
        )
        return min(max(cb, q_lo), q_hi)
    lo, hi = d.c_p, cb
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.log(cb / mid) - 1.0 + d.c_p / mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12:
            break
    return min(max(0.5 * (lo + hi), q_lo), q_hi)


def relay_power_best_response(
    i: int,
    profile: StrategyProfile,
    demand: np.ndarray,
    scen: Scenario,
    M: float,
    H: np.ndarray | None = None,
    hinge: bool = True,
    power_grid: int = 50,
) -> tuple[int, float]:
    """Best (target, power) for device i with everyone else held fixed.

    Device targets get the minimal power meeting the arrival deadline
    against the current co-target interference (power bound when the
    deadline is unmeetable); the direct link is searched over an
    ascending power grid, where the energy-minimal point wins. Ranking
    is by penalized profit; ties keep the lowest device target, with the
    direct link ordered last.
    """
    if H is None:
        H = build_channel_matrix(scen)
    n, ap = scen.n_devices, scen.ap
    d = scen.devices[i]
    T_s = routing.processing_times(demand, scen)
    others = [k for k in range(n) if k != i]
    inflow_i = sum(1 for k in others if profile.targets[k] == i)

    candidates: list[tuple[int, float]] = []
    for j in others:
        interference = sum(
            H[k, j] * profile.powers[k] for k in others if profile.targets[k] == j
        )
        slack = T_s[j] - T_s[i] - d.T_a * inflow_i
        if slack > 0:
            try:
                p = radio.min_power_for_rate(
                    i, j, scen.I_d / slack * (1.0 + _TIMING_SAFETY), interference, H, scen
                )
            except radio.PowerLimitError:
                p = d.p_max
        else:
            p = d.p_max
        candidates.append((j, p))
    for k in range(1, power_grid + 1):
        candidates.append((ap, d.p_max * k / power_grid))

    targets = profile.targets.copy()
    powers = profile.powers.copy()
    best: tuple[int, float] | None = None
    best_val = -np.inf
    any_feasible = False
    for j, p in candidates:
        if p <= 0:
            continue
        targets[i], powers[i] = j, p
        val, rho = _value(i, profile.prices, targets, powers, demand, scen, M, H, hinge)
        any_feasible = any_feasible or rho == 0.0
        if val > best_val:
            best, best_val = (j, p), val
    assert best is not None
    if not any_feasible:
        logger.warning(
            "device %d has no feasible action even at p_max; "
            "keeping the least-penalized one (target %d)", i, best[0]
        )
    return best


def default_init(scen: Scenario, power_grid: int = 50) -> StrategyProfile:
    """Everyone direct to the access point at the lowest grid power,
    prices at their closed-form optimum."""
    n = scen.n_devices
    prices = np.array([price_best_response(i, scen) for i in range(n)])
    targets = np.full(n, scen.ap, dtype=int)
    powers = scen.param("p_max") / power_grid
    return StrategyProfile(prices, targets, powers)


def unilateral_gains(
    profile: StrategyProfile,
    scen: Scenario,
    M: float,
    H: np.ndarray | None = None,
    hinge: bool = True,
    power_grid: int = 50,
) -> np.ndarray:
    """Best-response improvement available to each device at a profile.

    Re-runs the price and the relay/power best responses once per device
    and measures the penalized-profit gain of the better of the two.
    """
    if H is None:
        H = build_channel_matrix(scen)
    n = scen.n_devices
    demand = lower_level.best_response_demand(profile.prices, scen)
    gains = np.zeros(n)
    for i in range(n):
        base, _ = _value(
            i, profile.prices, profile.targets, profile.powers, demand, scen, M, H, hinge
        )
        q_alt = price_best_response(i, scen)
        prices_alt = profile.prices.copy()
        prices_alt[i] = q_alt
        demand_alt = lower_level.best_response_demand(prices_alt, scen)
        val_q, _ = _value(
            i, prices_alt, profile.targets, profile.powers, demand_alt, scen, M, H, hinge
        )
        j_alt, p_alt = relay_power_best_response(
            i, profile, demand, scen, M, H, hinge, power_grid
        )
        targets_alt = profile.targets.copy()
        powers_alt = profile.powers.copy()
        targets_alt[i], powers_alt[i] = j_alt, p_alt
        val_jp, _ = _value(
            i, profile.prices, targets_alt, powers_alt, demand, scen, M, H, hinge
        )
        gains[i] = max(val_q, val_jp) - base
    return gains


def best_response_dynamics(
    scen: Scenario,
    cfg: PenaltyConfig | None = None,
    eps_nash: float = 1e-6,
    max_iter: int = 100,
    init: StrategyProfile | None = None,
    order: str = "forward",
    power_grid: int = 50,
) -> EquilibriumReport:
    """Round-robin best-response iteration over an increasing penalty schedule.

    Each round updates every device's price (closed form) and then its
    (target, power) link; the demand iterate refreshes after each full
    round. The schedule re-converges the dynamics at each penalty
    coefficient. Non-convergence is reported, never raised.
    """
    cfg = cfg or PenaltyConfig()
    if order not in ("forward", "reverse"):
        raise ValueError(f"order must be 'forward' or 'reverse', got {order!r}")
    H = build_channel_matrix(scen)
    n = scen.n_devices
    profile = init.copy() if init is not None else default_init(scen, power_grid)
    demand = lower_level.best_response_demand(profile.prices, scen)
    device_order = list(range(n)) if order == "forward" else list(reversed(range(n)))

    rounds = 0
    stable = False
    for M in cfg.m_schedule:
        stable = False
        for _ in range(max_iter):
            rounds += 1
            changed = False
            for i in device_order:
                q_new = price_best_response(i, scen)
                if abs(q_new - profile.prices[i]) > _Q_TOL:
                    changed = True
                profile.prices[i] = q_new
                j_new, p_new = relay_power_best_response(
                    i, profile, demand, scen, M, H, cfg.hinge, power_grid
                )
                if j_new != profile.targets[i] or abs(p_new - profile.powers[i]) > _P_TOL:
                    changed = True
                profile.targets[i] = j_new
                profile.powers[i] = p_new
            demand = lower_level.best_response_demand(profile.prices, scen)
            if not changed:
                stable = True
                break
        if not stable:
            logger.warning("dynamics did not settle within %d rounds at M=%g", max_iter, M)

    M_final = cfg.m_schedule[-1]
    gain = float(np.max(np.maximum(unilateral_gains(
        profile, scen, M_final, H, cfg.hinge, power_grid
    ), 0.0), initial=0.0))
    rates = radio.transmission_rates(profile.targets, profile.powers, H, scen)
    profits = np.array([
        device_profit(i, profile, demand, scen, rates=rates, H=H) for i in range(n)
    ])
    I = profile.indicator(scen.n_nodes)
    feas, violations = routing.feasible(I, demand, rates, scen, cfg.eps_feas)
    converged = stable and gain <= eps_nash and feas
    return EquilibriumReport(
        prices=profile.prices,
        targets=profile.targets,
        powers=profile.powers,
        demand=demand,
        rates=rates,
        profits=profits,
        owner_utility=lower_level.owner_utility(demand, profile.prices, scen),
        converged=converged,
        iterations=rounds,
        max_unilateral_gain=gain,
        feasible=feas,
        violations=violations,
    )


def solve_stackelberg(
    scen: Scenario,
    cfg: PenaltyConfig | None = None,
    eps_nash: float = 1e-6,
    max_iter: int = 100,
    init: StrategyProfile | None = None,
    power_grid: int = 50,
    order_check: bool = True,
) -> EquilibriumReport:
    """Full bilevel solve: leader dynamics, then the follower response
    and owner utility at the resulting profile.

    With order_check the dynamics also run in reverse device order and
    the report records whether both orders reach the same profile.
    """
    report = best_response_dynamics(
        scen, cfg, eps_nash=eps_nash, max_iter=max_iter, init=init, power_grid=power_grid
    )
    if order_check:
        alt = best_response_dynamics(
            scen, cfg, eps_nash=eps_nash, max_iter=max_iter, init=init,
            order="reverse", power_grid=power_grid,
        )
        report.order_robust = bool(
            np.array_equal(alt.targets, report.targets)
            and np.allclose(alt.prices, report.prices, rtol=0, atol=1e-9)
            and np.allclose(alt.powers, report.powers, rtol=0, atol=1e-9)
        )
    return report
