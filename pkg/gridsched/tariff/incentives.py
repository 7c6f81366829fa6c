"""
Reward/penalty price incentives.

The coefficient magnitude grows exponentially with the relative load shift r:
w^-1 (e^{|r|/w} - 1) on the reward branch and w (e^{|r|/w} - 1) on the penalty branch.
Signs follow the price narrative: when the operator wants more load than customers
planned (delta > 0) the consumption price falls, when it wants less it rises, and the
feed-in price only ever rises.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from gridsched.model.scenario import TariffParams

logger = logging.getLogger("tariff")


@dataclass(frozen=True)
class LoadGap:
    desired: np.ndarray
    uncoordinated: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.desired - self.uncoordinated


def branch_magnitude(ratio, w: float, reward: bool, cap: Optional[float] = None) -> np.ndarray:
    growth = np.expm1(np.abs(np.asarray(ratio, dtype=float)) / w)
    magnitude = growth / w if reward else growth * w
    if cap is not None:
        magnitude = np.minimum(magnitude, cap)
    return magnitude


def _safe_ratio(change: np.ndarray, baseline: np.ndarray, what: str, min_share: float = 0.0) -> np.ndarray:
    """
    change / baseline, with 0 wherever the baseline is at most `min_share` of the largest
    baseline magnitude (per row for a home x slot matrix).
    """
    magnitude = np.abs(baseline)
    if magnitude.ndim == 0 or magnitude.size == 0:
        floor = min_share * magnitude
    else:
        floor = min_share * np.max(magnitude, axis=-1, keepdims=True)
    small = (baseline == 0) | (magnitude <= floor)
    flagged = small & (change != 0)
    if np.any(flagged):
        logger.warning(f"Zero {what} baseline (|value| <= {float(np.max(floor)):.3g} kW) at slots "
                       f"{np.argwhere(flagged).ravel().tolist()}; incentive set to 0 there")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(small, 0.0, change / np.where(small, 1.0, baseline))
    return ratio


def _signed(ratio: np.ndarray, delta: np.ndarray, w: float, for_fit: bool, cap: Optional[float]) -> np.ndarray:
    if for_fit:
        return np.where(delta < 0, -branch_magnitude(ratio, w, reward=True, cap=cap), 0.0)
    reward = -branch_magnitude(ratio, w, reward=True, cap=cap)
    penalty = branch_magnitude(ratio, w, reward=False, cap=cap)
    return np.where(delta > 0, reward, np.where(delta < 0, penalty, 0.0))


def _out(value: np.ndarray):
    return float(value) if value.ndim == 0 else value


def reward_coeff_global(desired, uncoordinated, w: float, for_fit: bool = False,
                        cap: Optional[float] = None, min_share: float = 0.0):
    """Network-wide coefficient sigma_t from the desired vs. uncoordinated total load."""
    desired = np.asarray(desired, dtype=float)
    uncoordinated = np.asarray(uncoordinated, dtype=float)
    delta = desired - uncoordinated
    ratio = _safe_ratio(delta, uncoordinated, "network load", min_share)
    return _out(_signed(ratio, delta, w, for_fit, cap))


def reward_coeff_individual(suggested, original, delta_network, w: float, for_fit: bool = False,
                            cap: Optional[float] = None, min_share: float = 0.0):
    """
    Per-home coefficient: the ratio uses the home's own suggested vs. uncoordinated load,
    the branch follows the sign of the network-level gap.
    """
    suggested = np.asarray(suggested, dtype=float)
    original = np.asarray(original, dtype=float)
    delta_network = np.broadcast_to(np.asarray(delta_network, dtype=float), suggested.shape)
    ratio = _safe_ratio(suggested - original, original, "home load", min_share)
    return _out(_signed(ratio, delta_network, w, for_fit, cap))


def price_gap(sigma, delta_l, rt_buy, rt_sell):
    """epsilon = sigma * marginal real-time cost (mu_b above plan, mu_s below, 0 on plan)."""
    delta_l = np.asarray(delta_l, dtype=float)
    marginal = np.where(delta_l > 0, rt_buy, np.where(delta_l < 0, rt_sell, 0.0))
    return _out(np.asarray(sigma, dtype=float) * marginal)


def global_adjustments(gap: LoadGap, tariff: TariffParams) -> Tuple[np.ndarray, np.ndarray]:
    """(adjust, fit_adjust), each length T."""
    T = gap.desired.shape[0]
    mu_b, mu_s = tariff.series("rt_buy", T), tariff.series("rt_sell", T)
    limits = dict(cap=tariff.sigma_cap, min_share=tariff.min_baseline_share)
    sigma = reward_coeff_global(gap.desired, gap.uncoordinated, tariff.incentive_w, **limits)
    sigma_fit = reward_coeff_global(gap.desired, gap.uncoordinated, tariff.incentive_w, for_fit=True, **limits)
    adjust = np.asarray(price_gap(sigma, gap.delta, mu_b, mu_s))
    fit_adjust = -np.asarray(price_gap(sigma_fit, gap.delta, mu_b, mu_s))
    return adjust, np.maximum(fit_adjust, 0.0)


def individual_adjustments(suggested: np.ndarray, uncoordinated: np.ndarray, gap: LoadGap,
                           tariff: TariffParams) -> Tuple[np.ndarray, np.ndarray]:
    """(adjust, fit_adjust), each H x T with rows in home order."""
    T = gap.desired.shape[0]
    mu_b, mu_s = tariff.series("rt_buy", T), tariff.series("rt_sell", T)
    delta = np.broadcast_to(gap.delta, suggested.shape)
    limits = dict(cap=tariff.sigma_cap, min_share=tariff.min_baseline_share)
    sigma = np.asarray(reward_coeff_individual(suggested, uncoordinated, gap.delta, tariff.incentive_w, **limits))
    sigma_fit = np.asarray(reward_coeff_individual(suggested, uncoordinated, gap.delta, tariff.incentive_w,
                                                   for_fit=True, **limits))
    adjust = np.asarray(price_gap(sigma, delta, mu_b, mu_s)).reshape(suggested.shape)
    fit_adjust = -np.asarray(price_gap(sigma_fit, delta, mu_b, mu_s)).reshape(suggested.shape)
    return adjust, np.maximum(fit_adjust, 0.0)
