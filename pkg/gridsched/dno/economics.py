"""Operator economics: real-time balancing cost, profit and customer rebates."""

import logging
from dataclasses import dataclass

import numpy as np

from gridsched.errors import ZeroBill

logger = logging.getLogger("dno")


def realtime_cost(total_load, planned, rt_buy, rt_sell, slot_hours: float = 1.0):
    """
    Balancing cost per slot: shortfall bought at mu_b, surplus sold back at a loss of mu_s.
    Nonnegative whenever both rates are.
    """
    gap = np.asarray(total_load, dtype=float) - np.asarray(planned, dtype=float)
    cost = (np.asarray(rt_buy) * np.maximum(gap, 0.0) + np.asarray(rt_sell) * np.maximum(-gap, 0.0)) * slot_hours
    return float(cost) if np.ndim(cost) == 0 else cost


def dno_profit(customer_bills: float, dayahead_cost: float, realtime_cost: float) -> float:
    return float(customer_bills - dayahead_cost - realtime_cost)


@dataclass(frozen=True)
class RebateVector:
    values: np.ndarray

    @property
    def average(self) -> float:
        return float(np.mean(self.values)) if self.values.size else 0.0

    @property
    def spread(self) -> float:
        """Sum of absolute deviations from the average rebate."""
        return float(np.sum(np.abs(self.values - self.average)))


def rebates(bills_uncoordinated, bills_suggested) -> RebateVector:
    """Normalized saving per home; negative when a home pays more than it did alone."""
    before = np.asarray(bills_uncoordinated, dtype=float)
    after = np.asarray(bills_suggested, dtype=float)
    if np.any(before == 0):
        raise ZeroBill(f"uncoordinated bill is zero for home index {np.argwhere(before == 0).ravel().tolist()}")
    return RebateVector(values=(before - after) / before)
