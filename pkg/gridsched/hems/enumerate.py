"""
Exhaustive household search for small instances.

Independent of the DP: every combination of appliance start slots and every SOC path on
the battery grid is costed in one vectorized pass.
"""

import itertools
import logging
from typing import List, Optional, Tuple

import numpy as np

from gridsched.errors import GridTooCoarse, InfeasibleWindow, TooLarge
from gridsched.hems.battery import battery_power, stage_cost
from gridsched.hems.solver import ProximalTerms
from gridsched.model.scenario import Battery, Home, TimeGrid
from gridsched.tariff.schedule import PriceSchedule

logger = logging.getLogger("hems")

MAX_CANDIDATES = 5_000_000


def appliance_start_combos(home: Home) -> List[Tuple[int, ...]]:
    return list(itertools.product(*[range(a.window_start, a.latest_start + 1) for a in home.appliances]))


def appliance_load_options(home: Home, num_slots: int) -> np.ndarray:
    """One row of appliance load per feasible combination of start slots."""
    combos = appliance_start_combos(home)
    loads = np.zeros((len(combos), num_slots))
    for c, starts in enumerate(combos):
        for app, start in zip(home.appliances, starts):
            loads[c, start:start + app.job_length_slots] += app.power_kw
    return loads


def _level_moves(battery: Battery, levels: np.ndarray) -> List[List[int]]:
    return [
        [j for j in range(levels.size) if battery.step_min - 1e-9 <= levels[j] - levels[i] <= battery.step_max + 1e-9]
        for i in range(levels.size)
    ]


def _start_level(battery: Battery, levels: np.ndarray) -> int:
    start = [i for i, level in enumerate(levels) if abs(level - battery.soc_initial) <= 1e-9]
    if not start:
        raise GridTooCoarse(f"soc_initial {battery.soc_initial} is not on the battery grid")
    return start[0]


def count_soc_paths(battery: Battery, grid: TimeGrid) -> int:
    """Number of admissible SOC paths, counted without building them."""
    levels = battery.soc_grid()
    moves = _level_moves(battery, levels)
    ways = np.zeros(levels.size, dtype=object)
    ways[_start_level(battery, levels)] = 1
    for _ in range(grid.num_slots):
        nxt = np.zeros(levels.size, dtype=object)
        for i, targets in enumerate(moves):
            for j in targets:
                nxt[j] += ways[i]
        ways = nxt
    floor = -np.inf if battery.soc_terminal_min is None else battery.soc_terminal_min - 1e-9
    return int(sum(w for w, level in zip(ways, levels) if level >= floor))


def count_options(home: Home, grid: TimeGrid) -> int:
    """Candidate schedules of one home: start combinations times SOC paths."""
    combos = 1
    for app in home.appliances:
        combos *= app.latest_start - app.window_start + 1
    if home.battery is None:
        return combos
    return combos * count_soc_paths(home.battery, grid)


def soc_paths(battery: Battery, grid: TimeGrid) -> Tuple[np.ndarray, List[Tuple[int, ...]]]:
    """(grid levels, every admissible path of T + 1 level indices)."""
    if count_soc_paths(battery, grid) > MAX_CANDIDATES:
        raise TooLarge(f"more than {MAX_CANDIDATES} SOC paths")
    levels = battery.soc_grid()
    moves = _level_moves(battery, levels)
    floor = -np.inf if battery.soc_terminal_min is None else battery.soc_terminal_min - 1e-9
    paths: List[Tuple[int, ...]] = [(_start_level(battery, levels),)]
    for _ in range(grid.num_slots):
        paths = [p + (j,) for p in paths for j in moves[p[-1]]]
    return levels, [p for p in paths if levels[p[-1]] >= floor]


def battery_power_options(battery: Optional[Battery], grid: TimeGrid) -> np.ndarray:
    """One row of battery grid power per admissible SOC path."""
    if battery is None:
        return np.zeros((1, grid.num_slots))
    levels, paths = soc_paths(battery, grid)
    power = np.array([
        [battery_power(battery, float(levels[b] - levels[a]), grid.slot_hours) for a, b in zip(p, p[1:])]
        for p in paths
    ])
    return power.reshape(len(paths), grid.num_slots)


def enumerate_schedules(
    home: Home,
    prices: PriceSchedule,
    prox: Optional[ProximalTerms] = None,
    grid: Optional[TimeGrid] = None,
) -> Tuple[float, np.ndarray]:
    """Returns (minimum objective, net load of one minimizer)."""
    grid = grid or TimeGrid(num_slots=len(home.base_load_kw))
    T = grid.num_slots
    count = count_options(home, grid)
    if count > MAX_CANDIDATES:
        raise TooLarge(f"{count} candidate schedules")
    apps = appliance_load_options(home, T)
    bats = battery_power_options(home.battery, grid)
    if bats.shape[0] == 0:
        raise InfeasibleWindow(f"home {home.id}: no SOC path meets the terminal requirement")

    buy = prices.buy_for(home.id) if prices.individualized else prices.buy_for()
    fit = prices.fit_for(home.id) if prices.individualized else prices.fit_for()
    if prox is not None and prox.price_adjust is not None:
        buy = buy + prox.price_adjust
    if prox is not None and prox.fit_adjust is not None:
        fit = fit + prox.fit_adjust

    load = home.fixed_net_load()[None, None, :] + apps[:, None, :] + bats[None, :, :]
    cost = stage_cost(load, buy, fit, grid.slot_hours)
    if prox is not None:
        gap = load - prox.suggested_load + prox.scaled_dual
        cost = prox.alpha * cost + 0.5 * prox.rho * gap ** 2
    totals = cost.sum(axis=2)
    c, b = np.unravel_index(int(np.argmin(totals)), totals.shape)
    return float(totals[c, b]), load[c, b]
