"""Battery power conversion and the per-slot payment of a household."""

import logging
from dataclasses import dataclass
import math

import numpy as np

from gridsched.errors import GridTooCoarse, StepOutOfRange
from gridsched.model.scenario import Battery

logger = logging.getLogger("hems")

_STEP_TOL = 1e-9


def battery_power(battery: Battery, step: float, slot_hours: float) -> float:
    """
    Grid-side battery power for an SOC step. Charging draws more than it stores,
    discharging delivers less than it releases.
    """
    if step < battery.step_min - _STEP_TOL or step > battery.step_max + _STEP_TOL:
        raise StepOutOfRange(f"SOC step {step} outside [{battery.step_min}, {battery.step_max}]")
    if step > 0:
        return battery.capacity_kwh * step / (battery.eff_charge * slot_hours)
    if step < 0:
        return battery.capacity_kwh * battery.eff_discharge * step / slot_hours
    return 0.0


def stage_cost(load_kw, price, fit, slot_hours: float):
    """Payment for one slot: consumption at `price`, export credited at `fit`. Vectorized."""
    load = np.asarray(load_kw, dtype=float)
    cost = np.where(load > 0, price * load * slot_hours, np.where(load < 0, fit * load * slot_hours, 0.0))
    if cost.ndim == 0:
        return float(cost)
    return cost


@dataclass(frozen=True)
class SocGrid:
    """Discrete SOC levels and the grid-to-grid moves the rate limits allow."""
    levels: np.ndarray
    steps: np.ndarray          # integer level offsets
    step_fraction: np.ndarray  # SOC fraction per offset
    power_kw: np.ndarray       # grid power per offset
    initial_index: int
    terminal_index: int

    @property
    def size(self) -> int:
        return int(self.levels.size)


def build_soc_grid(battery: Battery, slot_hours: float) -> SocGrid:
    span = battery.soc_max - battery.soc_min
    if span <= 0:
        levels = np.array([battery.soc_min])
        steps = np.array([0])
        spacing = 0.0
    else:
        levels = np.linspace(battery.soc_min, battery.soc_max, battery.soc_levels)
        spacing = span / (battery.soc_levels - 1)
        k_min = max(math.ceil(battery.step_min / spacing - _STEP_TOL), -(battery.soc_levels - 1))
        k_max = min(math.floor(battery.step_max / spacing + _STEP_TOL), battery.soc_levels - 1)
        steps = np.arange(k_min, k_max + 1)

    initial = int(np.argmin(np.abs(levels - battery.soc_initial)))
    if abs(levels[initial] - battery.soc_initial) > _STEP_TOL:
        raise GridTooCoarse(
            f"soc_initial {battery.soc_initial} is not on the {levels.size}-level grid "
            f"[{battery.soc_min}, {battery.soc_max}]"
        )
    terminal = 0
    if battery.soc_terminal_min is not None and spacing > 0:
        terminal = max(0, math.ceil((battery.soc_terminal_min - battery.soc_min) / spacing - _STEP_TOL))
        terminal = min(terminal, levels.size - 1)

    fractions = steps * spacing
    power = np.array([battery_power(battery, float(s), slot_hours) for s in fractions])
    return SocGrid(
        levels=levels,
        steps=steps.astype(int),
        step_fraction=fractions,
        power_kw=power,
        initial_index=initial,
        terminal_index=terminal,
    )
