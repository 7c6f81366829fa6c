"""ADMM bookkeeping: dual updates, residuals, penalty adaptation and the iteration state."""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from gridsched.model.scenario import AdmmParams


@dataclass(frozen=True)
class IterationRecord:
    k: int
    rho: float
    primal_norm: float
    dual_norm: float
    dno_objective: float
    total_bills: float
    relinearizations: int = 0
    stalled: bool = False


@dataclass(frozen=True)
class CoordinationState:
    """One consistent snapshot; the driver replaces it wholesale each iteration."""
    iteration: int
    loads: np.ndarray          # customers' L, H x T
    suggested: np.ndarray      # operator's L-hat, H x T
    duals: np.ndarray          # scaled u, H x T
    rho: float
    suggested_losses: np.ndarray
    adjust: np.ndarray         # incentive on the consumption price, T or H x T
    fit_adjust: np.ndarray
    history: Tuple[IterationRecord, ...] = field(default_factory=tuple)
    converged: bool = False


def dual_update(duals: np.ndarray, loads: np.ndarray, suggested: np.ndarray) -> np.ndarray:
    return duals + loads - suggested


def residuals(loads: np.ndarray, suggested: np.ndarray, previous_suggested: np.ndarray,
              rho: float) -> Tuple[float, float]:
    """(primal, dual): ||L - L-hat|| and rho ||L-hat - previous L-hat||, Frobenius norms."""
    primal = float(np.linalg.norm(loads - suggested))
    dual = float(rho * np.linalg.norm(suggested - previous_suggested))
    return primal, dual


def adapt_rho(rho: float, primal_norm: float, dual_norm: float, params: AdmmParams) -> float:
    """Residual balancing: raise rho when the primal residual dominates, lower it in the opposite case."""
    if primal_norm > params.gamma * dual_norm:
        return rho * params.tau_incr
    if dual_norm > params.gamma * primal_norm:
        return rho / params.tau_decr
    return rho


def rescale_duals(duals: np.ndarray, rho_old: float, rho_new: float) -> np.ndarray:
    """Keeps the unscaled multiplier rho * u unchanged across a penalty change."""
    if rho_new == rho_old:
        return duals
    return duals * (rho_old / rho_new)
