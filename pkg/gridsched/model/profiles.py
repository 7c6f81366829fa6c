"""Synthetic household profiles (seeded base load and clear-sky PV)."""

from typing import Tuple

import numpy as np

from gridsched.errors import InvariantError
from gridsched.model.scenario import TimeGrid

# Base-load shape, kW before scaling.
BASE_FLOOR_KW = 0.35
MORNING_PEAK_KW, MORNING_HOUR, MORNING_WIDTH = 0.6, 7.0, 1.5
EVENING_PEAK_KW, EVENING_HOUR, EVENING_WIDTH = 0.6, 19.0, 2.0
NOISE_KW = 0.05
MIN_BASE_KW = 0.05

SUNRISE_HOUR, SUNSET_HOUR = 6.0, 18.0


def slot_hours_of_day(grid: TimeGrid) -> np.ndarray:
    return (np.arange(grid.num_slots) * grid.slot_hours) % 24.0


def pv_shape(hours: np.ndarray) -> np.ndarray:
    """Clear-sky bell on [0, 1]: sin² over daylight, exactly 1 at noon."""
    daylight = (hours > SUNRISE_HOUR) & (hours < SUNSET_HOUR)
    span = SUNSET_HOUR - SUNRISE_HOUR
    bell = np.sin(np.pi * (hours - SUNRISE_HOUR) / span) ** 2
    return np.where(daylight, bell, 0.0)


def base_load_shape(hours: np.ndarray) -> np.ndarray:
    morning = MORNING_PEAK_KW * np.exp(-((hours - MORNING_HOUR) ** 2) / (2 * MORNING_WIDTH ** 2))
    evening = EVENING_PEAK_KW * np.exp(-((hours - EVENING_HOUR) ** 2) / (2 * EVENING_WIDTH ** 2))
    return BASE_FLOOR_KW + morning + evening


def synthesize_profiles(
    seed: int, grid: TimeGrid, pv_peak_kw: float, base_scale: float = 1.0
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (base_load_kw, pv_kw) for one home.

    Deterministic for a seed. PV is a nonnegative generation magnitude.
    """
    if pv_peak_kw < 0:
        raise InvariantError("pv_peak_kw must be >= 0", [f"got {pv_peak_kw}"])
    hours = slot_hours_of_day(grid)
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, NOISE_KW, grid.num_slots)
    base = np.clip(base_load_shape(hours) * base_scale + noise, MIN_BASE_KW, None)
    pv = pv_peak_kw * pv_shape(hours)
    return np.round(base, 4), np.round(pv, 4)
