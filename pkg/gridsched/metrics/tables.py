"""Comparison tables between runs, and the incentive-coefficient curve."""

import logging
from typing import TYPE_CHECKING, Sequence

import numpy as np
import pandas as pd

from gridsched.errors import ScenarioMismatch
from gridsched.tariff.incentives import branch_magnitude

if TYPE_CHECKING:
    from gridsched.coordinator.result import RunResult

logger = logging.getLogger("metrics")


def savings_table(before: "RunResult", after: "RunResult") -> pd.DataFrame:
    """Per-home bill before and after, with saving = (before - after) / before."""
    if before.home_ids != after.home_ids or before.scenario.feeder != after.scenario.feeder \
            or before.scenario.grid != after.scenario.grid:
        raise ScenarioMismatch(f"runs cover different scenarios ({before.mode} vs {after.mode})")
    bill_before = np.asarray(before.bills, dtype=float)
    bill_after = np.asarray(after.bills, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        saving = np.where(bill_before != 0, (bill_before - bill_after) / bill_before, 0.0)
    return pd.DataFrame({
        "home": list(before.home_ids),
        "bill_before": bill_before,
        "bill_after": bill_after,
        "saving": saving,
        "saving_pct": 100.0 * saving,
    })


def sigma_curve(ratio: float, w_values: Sequence[float]) -> pd.DataFrame:
    """Reward and penalty coefficient magnitudes for one relative shift across w."""
    w = np.asarray(list(w_values), dtype=float)
    if np.any((w <= 0) | (w > 1)):
        raise ValueError("w values must lie in (0, 1]")
    return pd.DataFrame({
        "w": w,
        "reward": [float(branch_magnitude(ratio, v, reward=True)) for v in w],
        "penalty": [float(branch_magnitude(ratio, v, reward=False)) for v in w],
    })
