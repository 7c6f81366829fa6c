"""
Centralized optimum for tiny instances, by exhaustive search.

The joint objective is every customer's bill at day-ahead prices plus the operator's
real-time balancing cost on the exact load flow, subject to the line limits. It is a test
oracle for the coordinated runs, not a production path.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from gridsched.coordinator.result import RunResult, assemble_result
from gridsched.dno.economics import realtime_cost
from gridsched.errors import InfeasibleWindow, TooLarge
from gridsched.hems.battery import battery_power, stage_cost
from gridsched.hems.enumerate import appliance_load_options, appliance_start_combos, count_options, soc_paths
from gridsched.hems.solver import HouseholdSchedule
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import line_losses_kw, solve_batch
from gridsched.model.scenario import Home, Scenario, TimeGrid
from gridsched.tariff.pricing import base_price_schedule, planned_demand

logger = logging.getLogger("coordinator")

MAX_CANDIDATES = 10_000_000
CHUNK = 4096


@dataclass(frozen=True)
class _HomeOptions:
    home: Home
    loads: np.ndarray                       # options x T
    starts: List[Tuple[int, ...]]           # appliance starts per option
    soc: Optional[np.ndarray]               # options x (T + 1), None without battery
    battery_power: Optional[np.ndarray]     # options x T

    @property
    def count(self) -> int:
        return int(self.loads.shape[0])

    def schedule(self, i: int, buy: np.ndarray, fit: np.ndarray, grid: TimeGrid) -> HouseholdSchedule:
        T = grid.num_slots
        on = np.zeros((len(self.home.appliances), T), dtype=int)
        for a, (app, start) in enumerate(zip(self.home.appliances, self.starts[i])):
            on[a, start:start + app.job_length_slots] = 1
        soc = self.soc[i] if self.soc is not None else np.zeros(T + 1)
        bill = float(np.sum(stage_cost(self.loads[i], buy, fit, grid.slot_hours)))
        return HouseholdSchedule(
            home_id=self.home.id,
            net_load_kw=self.loads[i],
            appliance_start=tuple(self.starts[i]),
            appliance_on=on,
            battery_action=np.diff(soc) if self.soc is not None else np.zeros(T),
            battery_power_kw=self.battery_power[i] if self.battery_power is not None else np.zeros(T),
            soc=soc,
            cost=bill,
            bill=bill,
        )


def _home_options(home: Home, grid: TimeGrid) -> _HomeOptions:
    T = grid.num_slots
    combos = appliance_start_combos(home)
    apps = appliance_load_options(home, T)
    if home.battery is None:
        return _HomeOptions(home, home.fixed_net_load()[None, :] + apps, combos, None, None)

    levels, paths = soc_paths(home.battery, grid)
    if not paths:
        raise InfeasibleWindow(f"home {home.id}: no admissible SOC path")
    soc = np.array([levels[list(p)] for p in paths])
    power = np.array([
        [battery_power(home.battery, float(levels[b] - levels[a]), grid.slot_hours) for a, b in zip(p, p[1:])]
        for p in paths
    ]).reshape(len(paths), T)
    loads = home.fixed_net_load()[None, None, :] + apps[:, None, :] + power[None, :, :]
    return _HomeOptions(
        home=home,
        loads=loads.reshape(-1, T),
        starts=[c for c in combos for _ in paths],
        soc=np.tile(soc, (len(combos), 1)),
        battery_power=np.tile(power, (len(combos), 1)),
    )


def centralized_oracle(scenario: Scenario) -> RunResult:
    grid = scenario.grid
    T, dt = grid.num_slots, grid.slot_hours
    planned = planned_demand(scenario)
    prices = base_price_schedule(scenario, planned)
    buy, fit = prices.buy_for(), prices.fit_for()
    count = 1
    for home in scenario.homes:
        count *= count_options(home, grid)
    if count > MAX_CANDIDATES:
        raise TooLarge(f"{count} joint candidates exceeds the {MAX_CANDIDATES} cap")
    options = [_home_options(home, grid) for home in scenario.homes]
    logger.info(f"Centralized search over {count} joint candidates")

    net = build_network(scenario.feeder)
    limits = scenario.feeder.current_limits()
    mu_b, mu_s = scenario.tariff.series("rt_buy", T), scenario.tariff.series("rt_sell", T)
    bills = [stage_cost(o.loads, buy, fit, dt).sum(axis=1) for o in options]
    nodes = [net.index_of(n) for n in scenario.home_nodes()]

    best_value, best_choice = np.inf, None
    combos = itertools.product(*[range(o.count) for o in options])
    while True:
        chunk = list(itertools.islice(combos, CHUNK))
        if not chunk:
            break
        index = np.array(chunk, dtype=int).reshape(len(chunk), len(options))
        node_loads = np.zeros((len(chunk), T, net.num_nodes))
        home_total = np.zeros((len(chunk), T))
        value = np.zeros(len(chunk))
        for h, o in enumerate(options):
            rows = o.loads[index[:, h]]
            node_loads[:, :, nodes[h]] += rows
            home_total += rows
            value += scenario.admm.alpha * bills[h][index[:, h]]
        flow = solve_batch(scenario.feeder, node_loads.reshape(-1, net.num_nodes))
        currents = np.abs(flow.line_current).reshape(len(chunk), T, -1)
        losses = line_losses_kw(scenario.feeder, flow.line_current).sum(axis=1).reshape(len(chunk), T)
        value += np.sum(realtime_cost(home_total + losses, planned[None, :], mu_b, mu_s, dt), axis=1)
        feasible = np.all(currents <= limits[None, None, :] + 1e-9, axis=(1, 2))
        value = np.where(feasible, value, np.inf)
        i = int(np.argmin(value))
        if value[i] < best_value:
            best_value, best_choice = float(value[i]), index[i]

    if best_choice is None:
        raise InfeasibleWindow("no joint schedule satisfies the line limits")

    schedules = [o.schedule(int(best_choice[h]), buy, fit, grid) for h, o in enumerate(options)]
    logger.info(f"Centralized optimum {best_value:.4f} cents")
    return assemble_result("oracle", scenario, schedules, prices, planned)


def joint_objective(result: RunResult) -> float:
    """Bills at day-ahead prices plus real-time cost; the quantity the oracle minimizes."""
    scenario = result.scenario
    dt = scenario.grid.slot_hours
    bills = sum(
        float(np.sum(stage_cost(s.net_load_kw, result.prices.base, result.prices.fit, dt)))
        for s in result.schedules
    )
    return scenario.admm.alpha * bills + float(np.sum(result.network.realtime_cost))
