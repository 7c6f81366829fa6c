"""
Run drivers: every home on its own, and the coordinated protocol between the homes and
the operator.

Customers solve concurrently on a thread pool (one DP per home), with a barrier before
the operator step. The operator step, dual update and penalty adaptation are serial and
the coordination state is replaced, never mutated, between iterations.
"""

import asyncio
import dataclasses
import functools
import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from gridsched.coordinator.admm import (
    CoordinationState,
    IterationRecord,
    adapt_rho,
    dual_update,
    rescale_duals,
    residuals,
)
from gridsched.coordinator.result import RunResult, Trace, assemble_result, compute_bills
from gridsched.dno.subproblem import DnoIterate, FairnessTerms, dno_update
from gridsched.errors import DivergenceError
from gridsched.hems.solver import HouseholdSchedule, ProximalTerms, load_envelope, solve_household
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import solve_batch
from gridsched.model.scenario import Scenario
from gridsched.tariff.incentives import LoadGap, global_adjustments, individual_adjustments
from gridsched.tariff.pricing import base_price_schedule, planned_demand
from gridsched.tariff.schedule import PriceSchedule

logger = logging.getLogger("coordinator")

COORDINATED_MODES = ("plain", "global", "individualized")


@contextmanager
def _executor(executor: Optional[Executor], workers: int) -> Iterator[Executor]:
    if executor is not None:
        yield executor
        return
    pool = ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix="hems")
    try:
        yield pool
    finally:
        pool.shutdown(wait=True)


async def solve_customers(
    scenario: Scenario,
    prices: PriceSchedule,
    proxes: Sequence[Optional[ProximalTerms]],
    executor: Executor,
) -> List[HouseholdSchedule]:
    loop = asyncio.get_running_loop()
    tasks = [
        loop.run_in_executor(executor, functools.partial(solve_household, home, prices, prox, scenario.grid))
        for home, prox in zip(scenario.homes, proxes)
    ]
    return list(await asyncio.gather(*tasks))


async def run_uncoordinated(scenario: Scenario, executor: Optional[Executor] = None, workers: int = 4) -> RunResult:
    """Every home schedules against the day-ahead prices alone."""
    planned = planned_demand(scenario)
    prices = base_price_schedule(scenario, planned)
    with _executor(executor, workers) as pool:
        schedules = await solve_customers(scenario, prices, [None] * len(scenario.homes), pool)
    result = assemble_result("uncoordinated", scenario, schedules, prices, planned)
    logger.info(
        f"Uncoordinated run done: PAR {result.metrics.par:.3f}, "
        f"real-time cost {result.dno_costs.realtime_cost:.2f} cents"
    )
    return result


def _incentives(mode: str, scenario: Scenario, suggested: np.ndarray, suggested_losses: np.ndarray,
                baseline: RunResult) -> Tuple[np.ndarray, np.ndarray]:
    T = scenario.grid.num_slots
    if mode == "plain":
        return np.zeros(T), np.zeros(T)
    gap = LoadGap(desired=suggested.sum(axis=0) + suggested_losses, uncoordinated=baseline.network.total_load)
    if mode == "global":
        return global_adjustments(gap, scenario.tariff)
    return individual_adjustments(suggested, baseline.loads, gap, scenario.tariff)


def _fairness(mode: str, scenario: Scenario, prices: PriceSchedule, baseline: RunResult) -> Optional[FairnessTerms]:
    params = scenario.admm
    if mode == "plain" or params.fairness_weight == 0:
        return None
    if np.any(baseline.bills == 0):
        logger.warning("An uncoordinated bill is zero; rebate fairness penalty disabled")
        return None
    ids = scenario.home_ids
    return FairnessTerms(
        bound=params.fairness_eps,
        weight=params.fairness_weight,
        bills_uncoordinated=baseline.bills,
        buy=np.vstack([prices.buy_for(h) for h in ids]),
        fit=np.vstack([prices.fit_for(h) for h in ids]),
        slot_hours=scenario.grid.slot_hours,
    )


def true_overload(scenario: Scenario, suggested: np.ndarray) -> float:
    """Largest line-limit excess (pu) of the exact load flow of suggested loads."""
    net = build_network(scenario.feeder)
    flow = solve_batch(scenario.feeder, net.node_loads(scenario.home_nodes(), suggested))
    excess = np.abs(flow.line_current) - scenario.feeder.current_limits()[None, :]
    return float(np.max(excess, initial=0.0))


def _operator_step(mode: str, scenario: Scenario, state: CoordinationState, loads: np.ndarray,
                   adjust: np.ndarray, prices: PriceSchedule, planned: np.ndarray,
                   baseline: RunResult, bounds: Optional[Tuple[np.ndarray, np.ndarray]] = None,
                   ) -> Tuple[DnoIterate, int]:
    params = scenario.admm
    step = functools.partial(
        dno_update,
        loads,
        state.duals,
        state.rho,
        adjust,
        scenario.home_nodes(),
        scenario.feeder,
        planned,
        scenario.tariff,
        alpha=params.alpha,
        fairness=_fairness(mode, scenario, prices, baseline),
        bounds=bounds,
        slot_hours=scenario.grid.slot_hours,
        max_iters=params.dno_max_iters,
        tol=params.dno_tol,
    )
    iterate = step()
    relinearizations = 0
    while relinearizations < params.max_relinearizations:
        try:
            overload = true_overload(scenario, iterate.suggested_loads)
            if overload <= params.relinearize_tol:
                break
            relinearizations += 1
            logger.info(f"Suggested loads overload a line by {overload:.4f} pu; re-linearizing ({relinearizations})")
            iterate = step(operating_point=iterate.suggested_loads)
        except DivergenceError as e:
            logger.warning(f"Load flow at the suggested loads failed ({e}); keeping the last operator iterate")
            iterate = dataclasses.replace(iterate, stalled=True)
            break
    return iterate, relinearizations


async def run_coordinated(
    scenario: Scenario,
    mode: str = "global",
    executor: Optional[Executor] = None,
    workers: int = 4,
    baseline: Optional[RunResult] = None,
    max_iters: Optional[int] = None,
) -> RunResult:
    """
    Iterates customer solves, incentive refresh, operator step, dual update and penalty
    adaptation until both residuals meet their tolerances or the iteration cap is hit.
    The result carries the agreed customer loads of the best-residual iterate.
    """
    if mode not in COORDINATED_MODES:
        raise ValueError(f"unknown coordination mode {mode!r}; expected one of {COORDINATED_MODES}")
    params = scenario.admm
    max_iters = max_iters or params.max_iters
    T = scenario.grid.num_slots

    with _executor(executor, workers) as pool:
        if baseline is None:
            baseline = await run_uncoordinated(scenario, pool)
        planned = baseline.planned
        base_prices = PriceSchedule.flat(baseline.prices.base, baseline.prices.fit, scenario.home_ids)

        if not scenario.homes:
            return assemble_result(mode, scenario, (), base_prices, planned, baseline_bills=baseline.bills)

        unc = baseline.loads
        envelopes = [load_envelope(home, scenario.grid) for home in scenario.homes]
        bounds = (np.vstack([low for low, _ in envelopes]), np.vstack([high for _, high in envelopes]))
        state = CoordinationState(
            iteration=0,
            loads=unc,
            suggested=unc,
            duals=np.zeros_like(unc),
            rho=params.rho_init,
            suggested_losses=baseline.network.losses,
            adjust=np.zeros(T),
            fit_adjust=np.zeros(T),
        )
        feedback = params.customer_price_feedback and mode != "plain"
        trace_loads: List[np.ndarray] = []
        trace_suggested: List[np.ndarray] = []
        best: Optional[Tuple[float, List[HouseholdSchedule], PriceSchedule]] = None

        for k in range(1, max_iters + 1):
            customer_prices = base_prices.with_adjustments(state.adjust, state.fit_adjust)
            proxes = [
                ProximalTerms(
                    suggested_load=state.suggested[h],
                    scaled_dual=state.duals[h],
                    rho=state.rho,
                    alpha=params.alpha,
                    price_adjust=customer_prices.adjust_for(home.id) if feedback else None,
                    fit_adjust=customer_prices.fit_adjust_for(home.id) if feedback else None,
                )
                for h, home in enumerate(scenario.homes)
            ]
            schedules = await solve_customers(scenario, base_prices, proxes, pool)
            loads = np.vstack([s.net_load_kw for s in schedules])

            adjust, fit_adjust = _incentives(mode, scenario, state.suggested, state.suggested_losses, baseline)
            prices = base_prices.with_adjustments(adjust, fit_adjust)
            iterate, relinearizations = _operator_step(mode, scenario, state, loads, adjust, prices, planned,
                                                       baseline, bounds)
            suggested = iterate.suggested_loads

            duals = dual_update(state.duals, loads, suggested)
            primal, dual = residuals(loads, suggested, state.suggested, state.rho)
            bills = float(np.sum(compute_bills(loads, prices, scenario.home_ids, scenario.grid.slot_hours)))
            record = IterationRecord(
                k=k,
                rho=state.rho,
                primal_norm=primal,
                dual_norm=dual,
                dno_objective=iterate.objective_value,
                total_bills=bills,
                relinearizations=relinearizations,
                stalled=iterate.stalled,
            )
            logger.debug(f"[{mode}] k={k} rho={state.rho:.4g} primal={primal:.3e} dual={dual:.3e}")
            trace_loads.append(loads)
            trace_suggested.append(suggested)

            score = max(primal / params.eps_primal, dual / params.eps_dual)
            if best is None or score < best[0]:
                best = (score, schedules, prices)
            converged = primal <= params.eps_primal and dual <= params.eps_dual

            rho = state.rho if converged else adapt_rho(state.rho, primal, dual, params)
            state = CoordinationState(
                iteration=k,
                loads=loads,
                suggested=suggested,
                duals=rescale_duals(duals, state.rho, rho),
                rho=rho,
                suggested_losses=iterate.suggested_losses,
                adjust=adjust,
                fit_adjust=fit_adjust,
                history=state.history + (record,),
                converged=converged,
            )
            if converged:
                best = (score, schedules, prices)
                break

    if not state.converged:
        logger.warning(f"[{mode}] no convergence after {max_iters} iterations; returning best-residual iterate")
    _, schedules, prices = best
    result = assemble_result(
        mode,
        scenario,
        schedules,
        prices,
        planned,
        baseline_bills=baseline.bills,
        iterations=state.history,
        converged=state.converged,
        trace=Trace(loads=tuple(trace_loads), suggested=tuple(trace_suggested)),
    )
    logger.info(
        f"[{mode}] finished after {state.iteration} iterations (converged={state.converged}): "
        f"PAR {result.metrics.par:.3f}, real-time cost {result.dno_costs.realtime_cost:.2f} cents"
    )
    return result
