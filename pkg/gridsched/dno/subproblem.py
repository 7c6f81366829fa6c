"""
The operator's side of a coordination round.

Given the loads customers just reported, the operator picks suggested loads minimizing
real-time balancing cost, the incentive term and the proximal coupling to the customers,
subject to line-current limits. Losses and currents are linearized around an operating
point from the load flow. Without the fairness penalty the problem separates by slot and
each slot is solved exactly; the fairness penalty couples slots through the customers'
bills and is handled by an outer proximal-gradient loop.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from gridsched.dno.economics import realtime_cost
from gridsched.dno.projection import project_box_halfspace, project_halfspaces
from gridsched.hems.battery import stage_cost
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import linearize_slots
from gridsched.model.scenario import FeederTopology, TariffParams

logger = logging.getLogger("dno")

LIMIT_TOL = 1e-7
MIN_STEP = 1e-12


@dataclass(frozen=True)
class FairnessTerms:
    """Soft bound on the spread of customers' normalized rebates."""
    bound: float
    weight: float
    bills_uncoordinated: np.ndarray   # H
    buy: np.ndarray                   # H x T prices the customers pay
    fit: np.ndarray                   # H x T
    slot_hours: float = 1.0


@dataclass(frozen=True)
class DnoIterate:
    suggested_loads: np.ndarray       # H x T
    suggested_losses: np.ndarray      # T
    linearized_current: np.ndarray    # T x lines
    objective_value: float
    fairness_penalty: float
    max_overload: float
    spread: float
    stalled: bool = False


@dataclass(frozen=True)
class _Linearization:
    operating_point: np.ndarray   # H x T
    loss0: np.ndarray             # T
    loss_slope: np.ndarray        # H x T, dLoss/dL per home
    current0: np.ndarray          # T x lines
    current_slope: np.ndarray     # T x lines x H
    limits: np.ndarray            # lines

    def losses(self, y: np.ndarray) -> np.ndarray:
        return self.loss0 + np.sum(self.loss_slope * (y - self.operating_point), axis=0)

    def currents(self, y: np.ndarray) -> np.ndarray:
        shift = y - self.operating_point
        return self.current0 + np.einsum("tlh,ht->tl", self.current_slope, shift)


def _linearize(feeder: FeederTopology, home_nodes: Sequence[int], point: np.ndarray) -> _Linearization:
    net = build_network(feeder)
    columns = [net.index_of(n) for n in home_nodes]
    current0, loss0, d_current, d_loss = linearize_slots(feeder, net.node_loads(home_nodes, point))
    return _Linearization(
        operating_point=point,
        loss0=loss0,
        loss_slope=d_loss[:, columns].T,
        current0=current0,
        current_slope=d_current[:, :, columns],
        limits=feeder.current_limits(),
    )


class _SlotProblem:
    """min F(a.y + c - g) + (weight/2)||y - center||^2  s.t.  S y <= b, lower <= y <= upper, for one slot."""

    def __init__(self, a: np.ndarray, c: float, g: float, mu_b: float, mu_s: float, slot_hours: float,
                 S: np.ndarray, b: np.ndarray, max_iters: int, tol: float,
                 lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None):
        self.a, self.c, self.g = a, c, g
        self.mu_b, self.mu_s, self.slot_hours = mu_b, mu_s, slot_hours
        self.S, self.b = S, b
        self.lower = np.full(a.shape, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        self.upper = np.full(a.shape, np.inf) if upper is None else np.asarray(upper, dtype=float)
        self.max_iters, self.tol = max_iters, tol

    def balancing(self, y: np.ndarray) -> float:
        return realtime_cost(self.a @ y + self.c, self.g, self.mu_b, self.mu_s, self.slot_hours)

    def violation(self, y: np.ndarray) -> float:
        excess = np.concatenate([self.S @ y - self.b, self.lower - y, y - self.upper])
        return float(np.max(excess, initial=0.0))

    def solve(self, center: np.ndarray, weight: float) -> Tuple[np.ndarray, bool]:
        level = self.g - self.c
        candidates = []
        # above plan the cost slope is mu_b, below it is -mu_s
        for slope, row, rhs in (
            (self.mu_b * self.slot_hours, -self.a, -level),
            (-self.mu_s * self.slot_hours, self.a, level),
        ):
            z = center - slope * self.a / weight
            y, ok = project_box_halfspace(z, row, rhs, self.lower, self.upper)
            # an empty side (ok False) keeps the box corner; the other side wins on value
            if ok and np.any(self.S @ y > self.b + LIMIT_TOL):
                normals = np.vstack([row[None, :], self.S])
                offsets = np.concatenate([[rhs], self.b])
                y, ok = project_halfspaces(z, normals, offsets, self.max_iters, self.tol, self.lower, self.upper)
            value = self.balancing(y) + 0.5 * weight * float(np.sum(np.square(y - center)))
            candidates.append((self.violation(y) > LIMIT_TOL, value, not ok, y))
        # a side whose region misses the limits cannot converge; only the chosen side counts
        _, _, failed, best = min(candidates, key=lambda item: item[:3])
        return best, not failed


def _fairness_penalty(y: np.ndarray, fairness: Optional[FairnessTerms]) -> Tuple[float, float, np.ndarray]:
    """(penalty, spread, gradient wrt y)."""
    if fairness is None or fairness.weight == 0:
        return 0.0, 0.0, np.zeros_like(y)
    bills = np.sum(stage_cost(y, fairness.buy, fairness.fit, fairness.slot_hours), axis=1)
    before = fairness.bills_uncoordinated
    rebate = (before - bills) / before
    deviation = rebate - rebate.mean()
    spread = float(np.sum(np.abs(deviation)))
    excess = np.float64(max(spread - fairness.bound, 0.0))
    if excess == 0.0 or not np.isfinite(excess):
        return 0.0, spread, np.zeros_like(y)
    sign = np.sign(deviation)
    d_spread = sign - sign.mean()
    marginal = np.where(y > 0, fairness.buy, fairness.fit) * fairness.slot_hours
    gradient = 2.0 * fairness.weight * excess * (d_spread / before)[:, None] * (-marginal)
    with np.errstate(over="ignore"):
        penalty = float(fairness.weight * np.square(excess))
    return penalty, spread, gradient


def _fairness_step(fairness: FairnessTerms) -> float:
    """Inverse Lipschitz bound of the penalty gradient for a bill-linear spread."""
    marginal = np.maximum(fairness.buy, fairness.fit) * fairness.slot_hours
    # |d spread / d rebate| <= 2 per home
    scale = np.square(2.0 * marginal / np.abs(fairness.bills_uncoordinated)[:, None])
    lipschitz = 2.0 * fairness.weight * float(np.sum(scale))
    return 1.0 / lipschitz if lipschitz > 0 and np.isfinite(lipschitz) else MIN_STEP


def dno_objective(suggested: np.ndarray, losses: np.ndarray, loads: np.ndarray, duals: np.ndarray, rho: float,
                  eps_adjust: np.ndarray, planned: np.ndarray, tariff: TariffParams, alpha: float,
                  slot_hours: float = 1.0) -> float:
    """Balancing cost + alpha * incentive term + proximal coupling, at the given suggestion."""
    T = planned.shape[0]
    total = suggested.sum(axis=0) + losses
    balancing = realtime_cost(total, planned, tariff.series("rt_buy", T), tariff.series("rt_sell", T), slot_hours)
    incentive = alpha * float(np.sum(np.broadcast_to(eps_adjust, suggested.shape) * suggested))
    coupling = 0.5 * rho * float(np.sum((loads - suggested + duals) ** 2))
    return float(np.sum(balancing)) + incentive + coupling


def dno_update(
    loads: np.ndarray,
    duals: np.ndarray,
    rho: float,
    eps_adjust: np.ndarray,
    home_nodes: Sequence[int],
    feeder: FeederTopology,
    planned: np.ndarray,
    tariff: TariffParams,
    alpha: float = 1.0,
    fairness: Optional[FairnessTerms] = None,
    operating_point: Optional[np.ndarray] = None,
    bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    slot_hours: float = 1.0,
    max_iters: int = 500,
    tol: float = 1e-9,
) -> DnoIterate:
    """
    One operator step. Only the customers' hourly totals (`loads`) and the coordination
    state are needed; no appliance or battery detail crosses into this function.
    `bounds` is an optional (lower, upper) pair of H x T net-load envelopes.
    """
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    loads = np.asarray(loads, dtype=float)
    duals = np.asarray(duals, dtype=float)
    H, T = loads.shape
    if duals.shape != (H, T):
        raise ValueError(f"duals shape {duals.shape} does not match loads {(H, T)}")
    planned = np.asarray(planned, dtype=float)
    eps = np.broadcast_to(np.asarray(eps_adjust, dtype=float), (H, T))
    if H == 0:
        return DnoIterate(loads.copy(), np.zeros(T), np.zeros((T, len(feeder.lines))), 0.0, 0.0, 0.0, 0.0)

    point = loads if operating_point is None else np.asarray(operating_point, dtype=float)
    lin = _linearize(feeder, home_nodes, point)
    mu_b, mu_s = tariff.series("rt_buy", T), tariff.series("rt_sell", T)
    lower, upper = (np.full((H, T), -np.inf), np.full((H, T), np.inf)) if bounds is None else bounds
    lower = np.broadcast_to(np.asarray(lower, dtype=float), (H, T))
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (H, T))
    if np.any(lower > upper):
        raise ValueError("load envelope has lower > upper")
    slots = []
    for t in range(T):
        S = lin.current_slope[t]
        slots.append(_SlotProblem(
            a=1.0 + lin.loss_slope[:, t],
            c=float(lin.loss0[t] - lin.loss_slope[:, t] @ point[:, t]),
            g=float(planned[t]),
            mu_b=float(mu_b[t]),
            mu_s=float(mu_s[t]),
            slot_hours=slot_hours,
            S=S,
            b=lin.limits - lin.current0[t] + S @ point[:, t],
            max_iters=max_iters,
            tol=tol,
            lower=lower[:, t],
            upper=upper[:, t],
        ))

    target = loads + duals - alpha * eps / rho

    def minimize(center: np.ndarray, weight: float) -> Tuple[np.ndarray, bool]:
        y = np.empty((H, T))
        ok = True
        for t, slot in enumerate(slots):
            y[:, t], converged = slot.solve(center[:, t], weight)
            ok = ok and converged
        return y, ok

    def total(y: np.ndarray) -> float:
        base = dno_objective(y, lin.losses(y), loads, duals, rho, eps, planned, tariff, alpha, slot_hours)
        return base + _fairness_penalty(y, fairness)[0]

    y, converged = minimize(target, rho)
    stalled = not converged
    phi = total(y)

    penalty, _, gradient = _fairness_penalty(y, fairness)
    if penalty > 0:
        step = _fairness_step(fairness)
        for _ in range(max_iters):
            _, _, gradient = _fairness_penalty(y, fairness)
            if not np.any(gradient):
                break
            moved = y - step * gradient
            weight = rho + 1.0 / step
            candidate, ok = minimize((rho * target + moved / step) / weight, weight)
            with np.errstate(over="ignore", invalid="ignore"):
                value = total(candidate) if np.all(np.isfinite(candidate)) else np.inf
            if np.isfinite(value) and value < phi:
                improvement = (phi - value) / max(1.0, abs(phi))
                y, phi, stalled = candidate, value, stalled or not ok
                if improvement < tol:
                    break
            else:
                step *= 0.5
                if step < MIN_STEP:
                    break
        else:
            stalled = True

    # never return something worse than leaving the customers' loads untouched
    start_feasible = all(slot.violation(loads[:, t]) <= LIMIT_TOL for t, slot in enumerate(slots))
    if start_feasible and total(loads) < phi:
        y, phi = loads.copy(), total(loads)

    if stalled:
        logger.warning("DNO subproblem stalled; returning best iterate")

    losses = lin.losses(y)
    currents = lin.currents(y)
    penalty, spread, _ = _fairness_penalty(y, fairness)
    return DnoIterate(
        suggested_loads=y,
        suggested_losses=losses,
        linearized_current=currents,
        objective_value=dno_objective(y, losses, loads, duals, rho, eps, planned, tariff, alpha, slot_hours),
        fairness_penalty=penalty,
        max_overload=float(np.max(currents - lin.limits[None, :], initial=0.0)),
        spread=spread,
        stalled=stalled,
    )
