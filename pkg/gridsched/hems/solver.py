"""
Exact household scheduler.

State per slot is the joint appliance progress (mixed radix over job lengths) times the
battery SOC level. The backward pass fills a value table over every state, the forward
pass replays the optimum with a deterministic tie-break: earliest appliance starts first,
then the smallest battery move.
"""

import functools
import itertools
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gridsched.errors import InfeasibleWindow
from gridsched.hems.battery import SocGrid, build_soc_grid, stage_cost
from gridsched.model.scenario import Appliance, Home, TimeGrid
from gridsched.tariff.schedule import PriceSchedule

logger = logging.getLogger("hems")

TIE_TOL = 1e-9


@dataclass(frozen=True)
class ProximalTerms:
    """Augmentation of the household objective inside a coordination round."""
    suggested_load: np.ndarray
    scaled_dual: np.ndarray
    rho: float
    alpha: float = 1.0
    price_adjust: Optional[np.ndarray] = None
    fit_adjust: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if np.shape(self.suggested_load) != np.shape(self.scaled_dual):
            raise ValueError("suggested_load and scaled_dual must have the same length")


@dataclass(frozen=True)
class HouseholdSchedule:
    home_id: int
    net_load_kw: np.ndarray
    appliance_start: Tuple[int, ...]
    appliance_on: np.ndarray        # appliances x T, 0/1
    battery_action: np.ndarray      # SOC fraction moved per slot
    battery_power_kw: np.ndarray
    soc: np.ndarray                 # T + 1 values, soc[0] is the initial SOC
    cost: float                     # objective the solver minimized
    bill: float                     # payment at the prices the solver saw


@dataclass(frozen=True)
class _Stage:
    src: np.ndarray
    dst: np.ndarray
    power_kw: np.ndarray
    starts: np.ndarray   # transitions x appliances, True where the job starts this slot
    on: np.ndarray       # transitions x appliances


def _appliance_options(app: Appliance, progress: int, t: int) -> List[Tuple[int, bool, bool]]:
    """(next progress, on, started) choices for one appliance at slot t."""
    length = app.job_length_slots
    if progress == length:
        return [(length, False, False)]
    if progress > 0:
        return [(progress + 1, True, False)]
    if t < app.window_start:
        return [(0, False, False)]
    if t < app.latest_start:
        return [(0, False, False), (1, True, True)]
    if t == app.latest_start:
        return [(1, True, True)]
    return []


def _build_stages(appliances: Sequence[Appliance], num_slots: int) -> Tuple[int, List[_Stage]]:
    radices = [a.job_length_slots + 1 for a in appliances]
    strides = [int(np.prod(radices[:k])) for k in range(len(radices))]
    num_states = int(np.prod(radices)) if radices else 1
    n_app = len(appliances)

    def encode(progress: Sequence[int]) -> int:
        return sum(p * s for p, s in zip(progress, strides))

    stages = []
    for t in range(num_slots):
        src, dst, power, starts, on = [], [], [], [], []
        for progress in itertools.product(*[range(r) for r in radices]):
            options = [_appliance_options(a, p, t) for a, p in zip(appliances, progress)]
            for choice in itertools.product(*options):
                src.append(encode(progress))
                dst.append(encode([c[0] for c in choice]))
                power.append(sum(a.power_kw for a, c in zip(appliances, choice) if c[1]))
                on.append([c[1] for c in choice])
                starts.append([c[2] for c in choice])
        stages.append(
            _Stage(
                src=np.array(src, dtype=int),
                dst=np.array(dst, dtype=int),
                power_kw=np.array(power, dtype=float),
                starts=np.array(starts, dtype=bool).reshape(len(src), n_app),
                on=np.array(on, dtype=bool).reshape(len(src), n_app),
            )
        )
    return num_states, stages


class HouseholdSolver:
    """Precomputes the transition structure of one home; `solve` runs the DP for given prices."""

    def __init__(self, home: Home, grid: TimeGrid):
        self.home = home
        self.grid = grid
        self.num_slots = grid.num_slots
        self.num_states, self.stages = _build_stages(home.appliances, grid.num_slots)
        if home.battery is not None:
            self.soc: Optional[SocGrid] = build_soc_grid(home.battery, grid.slot_hours)
            self._steps = self.soc.steps
            self._pbat = self.soc.power_kw
            self._nb = self.soc.size
        else:
            self.soc = None
            self._steps = np.array([0])
            self._pbat = np.array([0.0])
            self._nb = 1
        self._fixed = home.fixed_net_load()
        # next SOC index per (current level, action); -1 marks moves off the grid
        nxt = np.arange(self._nb)[:, None] + self._steps[None, :]
        self._next_soc = np.where((nxt >= 0) & (nxt < self._nb), nxt, -1)

    def load_envelope(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-slot (lowest, highest) net load any schedule of this home can reach."""
        low = np.array([stage.power_kw.min(initial=np.inf) for stage in self.stages])
        high = np.array([stage.power_kw.max(initial=-np.inf) for stage in self.stages])
        return self._fixed + low + self._pbat.min(), self._fixed + high + self._pbat.max()

    def _objective(self, load: np.ndarray, t: int, buy: np.ndarray, fit: np.ndarray,
                   prox: Optional[ProximalTerms]) -> np.ndarray:
        value = stage_cost(load, buy[t], fit[t], self.grid.slot_hours)
        if prox is None:
            return value
        gap = load - prox.suggested_load[t] + prox.scaled_dual[t]
        return prox.alpha * value + 0.5 * prox.rho * gap ** 2

    def _lookahead(self, value_next: np.ndarray) -> np.ndarray:
        """value_next[m, next_soc[i, k]] with +inf for off-grid moves, shape (M, nb, nk)."""
        safe = np.clip(self._next_soc, 0, None)
        shifted = value_next[:, safe]
        return np.where(self._next_soc[None, :, :] >= 0, shifted, np.inf)

    def _terminal(self) -> np.ndarray:
        value = np.full((self.num_states, self._nb), np.inf)
        terminal_index = self.soc.terminal_index if self.soc is not None else 0
        value[self.num_states - 1, terminal_index:] = 0.0
        return value

    def solve(self, prices: PriceSchedule, prox: Optional[ProximalTerms] = None) -> HouseholdSchedule:
        T = self.num_slots
        if prices.num_slots != T:
            raise ValueError(f"price schedule has {prices.num_slots} slots, expected {T}")
        buy = prices.buy_for(self.home.id) if prices.individualized else prices.buy_for()
        fit = prices.fit_for(self.home.id) if prices.individualized else prices.fit_for()
        if prox is not None:
            if prox.price_adjust is not None:
                buy = buy + prox.price_adjust
            if prox.fit_adjust is not None:
                fit = fit + prox.fit_adjust

        values = np.empty((T + 1, self.num_states, self._nb))
        values[T] = self._terminal()
        for t in reversed(range(T)):
            stage = self.stages[t]
            load = self._fixed[t] + stage.power_kw[:, None] + self._pbat[None, :]
            cost = self._objective(load, t, buy, fit, prox)
            candidates = cost[:, None, :] + self._lookahead(values[t + 1])[stage.dst]
            best = candidates.min(axis=2)
            table = np.full((self.num_states, self._nb), np.inf)
            np.minimum.at(table, stage.src, best)
            values[t] = table

        soc_index = self.soc.initial_index if self.soc is not None else 0
        if not np.isfinite(values[0, 0, soc_index]):
            raise InfeasibleWindow(f"home {self.home.id}: no feasible schedule over {T} slots")

        return self._replay(values, soc_index, buy, fit, prox)

    def _replay(self, values: np.ndarray, soc_index: int, buy: np.ndarray, fit: np.ndarray,
                prox: Optional[ProximalTerms]) -> HouseholdSchedule:
        T = self.num_slots
        n_app = len(self.home.appliances)
        state = 0
        on = np.zeros((n_app, T), dtype=int)
        starts = [-1] * n_app
        actions = np.zeros(T, dtype=int)
        net = np.zeros(T)
        total = 0.0
        for t in range(T):
            stage = self.stages[t]
            rows = np.nonzero(stage.src == state)[0]
            load = self._fixed[t] + stage.power_kw[rows][:, None] + self._pbat[None, :]
            cost = self._objective(load, t, buy, fit, prox)
            nxt = self._next_soc[soc_index]
            future = np.where(nxt[None, :] >= 0,
                              values[t + 1][stage.dst[rows]][:, np.clip(nxt, 0, None)], np.inf)
            candidates = cost + future
            best = float(candidates.min())
            tied = np.argwhere(candidates <= best + TIE_TOL * max(1.0, abs(best)))
            r, k = min(
                (tuple(int(x) for x in ix) for ix in tied),
                key=lambda rk: (
                    tuple(0 if s else 1 for s in stage.starts[rows[rk[0]]]),
                    abs(int(self._steps[rk[1]])),
                    int(self._steps[rk[1]]),
                ),
            )
            row = rows[r]
            for a in range(n_app):
                if stage.starts[row, a]:
                    starts[a] = t
            on[:, t] = stage.on[row]
            actions[t] = k
            net[t] = load[r, k]
            total += float(cost[r, k])
            state = int(stage.dst[row])
            soc_index = int(nxt[k])

        step_fraction = self.soc.step_fraction[actions] if self.soc is not None else np.zeros(T)
        power = self._pbat[actions] if self.soc is not None else np.zeros(T)
        if self.soc is not None:
            soc = np.concatenate([[self.soc.levels[self.soc.initial_index]],
                                  self.soc.levels[self.soc.initial_index + np.cumsum(self._steps[actions])]])
        else:
            soc = np.zeros(T + 1)
        bill = float(np.sum(stage_cost(net, buy, fit, self.grid.slot_hours)))
        return HouseholdSchedule(
            home_id=self.home.id,
            net_load_kw=net,
            appliance_start=tuple(starts),
            appliance_on=on,
            battery_action=step_fraction,
            battery_power_kw=power,
            soc=soc,
            cost=total,
            bill=bill,
        )


@functools.lru_cache(maxsize=256)
def household_solver(home: Home, grid: TimeGrid) -> HouseholdSolver:
    return HouseholdSolver(home, grid)


def load_envelope(home: Home, grid: Optional[TimeGrid] = None) -> Tuple[np.ndarray, np.ndarray]:
    grid = grid or TimeGrid(num_slots=len(home.base_load_kw))
    return household_solver(home, grid).load_envelope()


def solve_household(
    home: Home,
    prices: PriceSchedule,
    prox: Optional[ProximalTerms] = None,
    grid: Optional[TimeGrid] = None,
) -> HouseholdSchedule:
    """
    Minimizes the household's payment over the slot grid, plus the proximal
    coordination term when `prox` is given.
    """
    grid = grid or TimeGrid(num_slots=len(home.base_load_kw))
    return household_solver(home, grid).solve(prices, prox)
