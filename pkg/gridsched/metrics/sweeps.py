"""Parameter sweeps that need full coordinated runs."""

import asyncio
import logging
from concurrent.futures import Executor
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from gridsched.coordinator.result import RunResult
from gridsched.coordinator.runs import run_coordinated, run_uncoordinated
from gridsched.model.scenario import Scenario
from gridsched.model.validation import validate_scenario

logger = logging.getLogger("metrics")

DEFAULT_W_VALUES = tuple(round(0.1 * i, 1) for i in range(1, 11))


def with_incentive_w(scenario: Scenario, w: float) -> Scenario:
    document = scenario.model_dump()
    document["tariff"]["incentive_w"] = w
    return validate_scenario(document)


async def w_sweep(
    scenario: Scenario,
    w_values: Sequence[float] = DEFAULT_W_VALUES,
    mode: str = "global",
    executor: Optional[Executor] = None,
    baseline: Optional[RunResult] = None,
    max_iters: Optional[int] = None,
) -> pd.DataFrame:
    """One coordinated run per w, gathered concurrently; rows sorted by w."""
    w_values = sorted(float(w) for w in w_values)
    if any(w <= 0 or w > 1 for w in w_values):
        raise ValueError("w values must lie in (0, 1]")
    baseline = baseline or await run_uncoordinated(scenario, executor)
    runs = await asyncio.gather(*[
        run_coordinated(with_incentive_w(scenario, w), mode, executor=executor, baseline=baseline,
                        max_iters=max_iters)
        for w in w_values
    ])
    baseline_bills = float(np.sum(baseline.bills))
    table = pd.DataFrame({
        "w": w_values,
        "total_bills": [r.dno_costs.bills_total for r in runs],
        "dno_profit": [r.dno_costs.profit for r in runs],
        "baseline_bills": baseline_bills,
        "converged": [r.converged for r in runs],
        "iterations": [len(r.iterations) for r in runs],
    })
    logger.info(f"w sweep over {len(w_values)} values done")
    return table
