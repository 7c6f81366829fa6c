"""
Coordinator facade: one entry point over every run mode.

Usage:
    coordinator = Coordinator(config)
    result = await coordinator.run(scenario, "global")
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

from core.config import Config
from gridsched.coordinator.oracle import centralized_oracle
from gridsched.coordinator.result import MODES, RunResult
from gridsched.coordinator.runs import run_coordinated, run_uncoordinated
from gridsched.model.scenario import Scenario

logger = logging.getLogger("coordinator")


class Coordinator:
    """
    Owns the worker pool for household solves and caches the uncoordinated baseline per
    scenario, so several coordinated modes on one scenario share it.
    """

    def __init__(self, config: Optional[Config] = None):
        self.config = config or Config()
        self._pool = ThreadPoolExecutor(max_workers=max(1, self.config.workers), thread_name_prefix="hems")
        self._baselines: Dict[Scenario, RunResult] = {}

    @property
    def executor(self) -> ThreadPoolExecutor:
        return self._pool

    def max_iters_for(self, scenario: Scenario) -> int:
        if self.config.max_iters_override > 0:
            return self.config.max_iters_override
        return scenario.admm.max_iters

    async def baseline(self, scenario: Scenario) -> RunResult:
        if scenario not in self._baselines:
            self._baselines[scenario] = await run_uncoordinated(scenario, self._pool)
        return self._baselines[scenario]

    async def run(self, scenario: Scenario, mode: str) -> RunResult:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        logger.info(f"Running {mode} on {len(scenario.homes)} homes, {scenario.grid.num_slots} slots")
        if mode == "uncoordinated":
            return await self.baseline(scenario)
        if mode == "oracle":
            return centralized_oracle(scenario)
        return await run_coordinated(
            scenario,
            mode,
            executor=self._pool,
            baseline=await self.baseline(scenario),
            max_iters=self.max_iters_for(scenario),
        )

    async def close(self):
        self._pool.shutdown(wait=True)
        self._baselines.clear()

    async def __aenter__(self) -> "Coordinator":
        return self

    async def __aexit__(self, *exc):
        await self.close()
