"""Day-ahead planning: expected household demand, planned purchase g_t and base prices."""

import logging
from typing import Optional, Sequence

import numpy as np

from gridsched.errors import LengthMismatch
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import solve_load_flow
from gridsched.model.scenario import Home, Scenario, TariffParams, TimeGrid
from gridsched.tariff.schedule import PriceSchedule

logger = logging.getLogger("tariff")


def day_ahead_price(g, tariff: TariffParams):
    """Marginal day-ahead cost scaled by the profit coefficient: phi * (2a g + b)."""
    price = tariff.profit_coeff * (2.0 * tariff.quad_a * np.asarray(g, dtype=float) + tariff.lin_b)
    return float(price) if np.ndim(price) == 0 else price


def dayahead_cost(g, tariff: TariffParams) -> float:
    """Operator's day-ahead purchase cost a g^2 + b g + c summed over slots."""
    g = np.asarray(g, dtype=float)
    return float(np.sum(tariff.quad_a * g ** 2 + tariff.lin_b * g + tariff.const_c))


def appliance_on_probability(home: Home, grid: TimeGrid) -> np.ndarray:
    """Appliances x T matrix of Pr(on) when the start is uniform over feasible starts."""
    prob = np.zeros((len(home.appliances), grid.num_slots))
    for a, app in enumerate(home.appliances):
        starts = range(app.window_start, app.latest_start + 1)
        for s in starts:
            prob[a, s:s + app.job_length_slots] += 1.0 / len(starts)
    return prob


def average_net_demand(home: Home, grid: TimeGrid) -> np.ndarray:
    """Expected net demand of a home before any price signal (battery idle on average)."""
    powers = np.array([app.power_kw for app in home.appliances])
    deferrable = powers @ appliance_on_probability(home, grid) if home.appliances else 0.0
    return home.fixed_net_load() + deferrable


def forecast_demand(home_demands: Sequence[np.ndarray], losses, dg) -> np.ndarray:
    """g_t = sum of expected home demand + forecast losses - DNO generation, clamped at 0."""
    losses = np.asarray(losses, dtype=float)
    dg = np.asarray(dg, dtype=float)
    lengths = {np.shape(d)[0] for d in home_demands} | {losses.shape[0], dg.shape[0]}
    if len(lengths) != 1:
        raise LengthMismatch(f"forecast inputs have differing lengths {sorted(lengths)}")
    total = np.sum(home_demands, axis=0) if len(home_demands) else np.zeros_like(losses)
    g = total + losses - dg
    if np.any(g < 0):
        clamped = np.nonzero(g < 0)[0].tolist()
        logger.warning(f"Planned demand negative at slots {clamped}; clamping to 0")
        g = np.clip(g, 0.0, None)
    return g


def planned_demand(scenario: Scenario) -> np.ndarray:
    """The scenario's g_t: its explicit forecast if present, otherwise the expected-demand forecast."""
    T = scenario.grid.num_slots
    if scenario.forecast_demand is not None:
        return np.asarray(scenario.forecast_demand, dtype=float)
    demands = [average_net_demand(home, scenario.grid) for home in scenario.homes]
    losses = np.zeros(T)
    if demands:
        net = build_network(scenario.feeder)
        node_loads = net.node_loads(scenario.home_nodes(), np.array(demands))
        losses = np.array([solve_load_flow(scenario.feeder, row).total_loss_kw for row in node_loads])
    dg = scenario.tariff.series("dg_power", T)
    return forecast_demand(demands, losses, dg)


def base_price_schedule(scenario: Scenario, planned: Optional[np.ndarray] = None) -> PriceSchedule:
    planned = planned_demand(scenario) if planned is None else planned
    T = scenario.grid.num_slots
    return PriceSchedule.flat(
        base=day_ahead_price(planned, scenario.tariff) * np.ones(T),
        fit=scenario.tariff.series("fit_rate", T),
        home_ids=scenario.home_ids,
    )
