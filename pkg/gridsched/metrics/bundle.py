"""Per-run metrics: peak-to-average ratio, losses, balancing cost, bills and line loading."""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from gridsched.errors import ZeroProfile

logger = logging.getLogger("metrics")


def par(profile) -> float:
    """Peak-to-average ratio T * max / sum."""
    profile = np.asarray(profile, dtype=float)
    total = float(np.sum(profile))
    if total <= 0:
        raise ZeroProfile(f"profile sums to {total}; PAR undefined")
    return float(profile.size * np.max(profile) / total)


@dataclass(frozen=True)
class MetricsBundle:
    par: float
    total_losses_kwh: float
    realtime_cost_cents: float
    per_home_bills: Tuple[float, ...]
    per_home_savings_pct: Tuple[float, ...]
    max_line_loading_pu: Tuple[float, ...]
    dno_profit_cents: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def compute_metrics(
    total_load: np.ndarray,
    losses: np.ndarray,
    line_current: np.ndarray,
    realtime_cost_cents: float,
    bills: np.ndarray,
    profit_cents: float,
    baseline_bills: Optional[np.ndarray] = None,
    slot_hours: float = 1.0,
) -> MetricsBundle:
    """PAR is taken on the network total including losses."""
    try:
        ratio = par(total_load)
    except ZeroProfile:
        logger.warning("Total network load is not positive; reporting PAR as 0")
        ratio = 0.0
    bills = np.asarray(bills, dtype=float)
    if baseline_bills is None:
        savings = np.zeros_like(bills)
    else:
        baseline = np.asarray(baseline_bills, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            savings = np.where(baseline != 0, 100.0 * (baseline - bills) / baseline, 0.0)
    loading = np.max(line_current, axis=0) if np.size(line_current) else np.zeros(np.shape(line_current)[-1])
    return MetricsBundle(
        par=ratio,
        total_losses_kwh=float(np.sum(losses) * slot_hours),
        realtime_cost_cents=float(realtime_cost_cents),
        per_home_bills=tuple(float(b) for b in bills),
        per_home_savings_pct=tuple(float(s) for s in savings),
        max_line_loading_pu=tuple(float(v) for v in loading),
        dno_profit_cents=float(profit_cents),
    )
