"""Tests for the coordination primitives, run drivers, oracle and Coordinator facade."""

import numpy as np
import pytest

from core.config import Config
from gridsched.coordinator.admm import adapt_rho, dual_update, rescale_duals, residuals
from gridsched.coordinator.engine import Coordinator
from gridsched.coordinator.oracle import centralized_oracle, joint_objective
from gridsched.coordinator.runs import run_coordinated, run_uncoordinated
from gridsched.errors import DivergenceError, TooLarge
from gridsched.hems.solver import load_envelope
from gridsched.model.scenario import (
    AdmmParams,
    Battery,
    FeederLine,
    FeederTopology,
    Home,
    Scenario,
    TariffParams,
    TimeGrid,
)


def _battery_only_scenario(rng) -> Scenario:
    """
    One battery home on a near-lossless line. The plan sits well below the load in odd
    slots and well above it in even ones, so the balancing cost is linear in the load.
    """
    T = 4
    low = rng.uniform(0.5, 1.5, 2)
    high = rng.uniform(15.0, 25.0, 2)
    battery = Battery(capacity_kwh=float(rng.uniform(1.5, 3.0)), soc_levels=5, step_min=-0.5, step_max=0.5,
                      soc_initial=0.5, soc_terminal_min=0.5)
    home = Home(
        id=1,
        node=1,
        battery=battery,
        pv_kw=(0.0,) * T,
        base_load_kw=tuple(float(v) for v in rng.uniform(3.0, 4.0, T)),
    )
    feeder = FeederTopology(
        nodes=(0, 1),
        lines=(FeederLine(from_node=0, to_node=1, resistance_pu=1e-6, reactance_pu=0.0, current_limit_pu=10.0),),
        load_power_factor=1.0,
    )
    return Scenario(
        grid=TimeGrid(num_slots=T),
        feeder=feeder,
        homes=(home,),
        tariff=TariffParams(rt_buy=0.01, rt_sell=0.01),
        admm=AdmmParams(rho_init=1.0, max_iters=100),
        forecast_demand=(float(low[0]), float(high[0]), float(low[1]), float(high[1])),
    )


class TestAdmmPrimitives:

    def test_dual_update(self):
        u = dual_update(np.array([[0.5]]), np.array([[3.0]]), np.array([[2.0]]))
        np.testing.assert_allclose(u, [[1.5]])

    def test_residuals(self):
        primal, dual = residuals(np.array([[1.0, 2.0]]), np.array([[1.0, 1.0]]), np.array([[0.0, 1.0]]), 2.0)
        assert primal == pytest.approx(1.0)
        assert dual == pytest.approx(2.0)

    def test_adapt_rho(self):
        params = AdmmParams(gamma=10.0, tau_incr=2.0, tau_decr=2.0)
        assert adapt_rho(1.0, 100.0, 1.0, params) == 2.0
        assert adapt_rho(1.0, 1.0, 100.0, params) == 0.5
        assert adapt_rho(1.0, 5.0, 1.0, params) == 1.0

    def test_rescale_keeps_unscaled_multiplier(self):
        u = np.array([[0.4, -0.2]])
        rescaled = rescale_duals(u, 1.0, 4.0)
        np.testing.assert_allclose(4.0 * rescaled, 1.0 * u)
        assert rescale_duals(u, 2.0, 2.0) is u


class TestRuns:

    async def test_uncoordinated(self, tiny_scenario):
        result = await run_uncoordinated(tiny_scenario, workers=2)
        assert result.mode == "uncoordinated"
        assert result.home_ids == (1, 2)
        np.testing.assert_allclose(result.bills, [s.bill for s in result.schedules])
        np.testing.assert_allclose(result.network.total_load, result.loads.sum(axis=0) + result.network.losses)
        assert result.metrics.par >= 1.0
        assert result.iterations == ()

    async def test_global_run_bookkeeping(self, tiny_scenario):
        result = await run_coordinated(tiny_scenario, "global", workers=2, max_iters=15)
        assert result.mode == "global"
        assert 1 <= len(result.iterations) <= 15
        assert [r.k for r in result.iterations] == list(range(1, len(result.iterations) + 1))
        assert len(result.trace.loads) == len(result.iterations)
        assert result.trace.suggested[0].shape == (2, 4)
        assert np.all(result.prices.fit_adjust >= 0)
        costs = result.dno_costs
        assert costs.profit == pytest.approx(costs.bills_total - costs.dayahead_cost - costs.realtime_cost)

    async def test_individualized_prices_per_home(self, tiny_scenario):
        result = await run_coordinated(tiny_scenario, "individualized", workers=2, max_iters=10)
        assert result.prices.individualized
        assert result.prices.adjust.shape == (2, 4)
        assert np.all(result.prices.fit_adjust >= 0)

    async def test_shared_baseline(self, tiny_scenario):
        baseline = await run_uncoordinated(tiny_scenario, workers=2)
        result = await run_coordinated(tiny_scenario, "plain", workers=2, baseline=baseline, max_iters=5)
        np.testing.assert_allclose(result.planned, baseline.planned)
        np.testing.assert_allclose(result.prices.adjust, 0.0)

    async def test_unknown_mode(self, tiny_scenario):
        with pytest.raises(ValueError):
            await run_coordinated(tiny_scenario, "oracle")

    async def test_collapsed_load_flow_keeps_operator_iterate(self, tiny_scenario, monkeypatch, caplog):
        def collapse(*args, **kwargs):
            raise DivergenceError("voltage collapsed to 0.100 pu after 1 sweeps")

        monkeypatch.setattr("gridsched.coordinator.runs.solve_batch", collapse)
        with caplog.at_level("WARNING", logger="coordinator"):
            result = await run_coordinated(tiny_scenario, "global", workers=2, max_iters=3)
        assert all(r.stalled and r.relinearizations == 0 for r in result.iterations)
        assert np.all(np.isfinite(result.loads))
        assert "keeping the last operator iterate" in caplog.text

    async def test_suggestions_stay_in_household_envelopes(self, tiny_scenario):
        result = await run_coordinated(tiny_scenario, "global", workers=2, max_iters=10)
        lower = np.vstack([load_envelope(home, tiny_scenario.grid)[0] for home in tiny_scenario.homes])
        upper = np.vstack([load_envelope(home, tiny_scenario.grid)[1] for home in tiny_scenario.homes])
        for suggested in result.trace.suggested:
            assert np.all(suggested >= lower - 1e-7)
            assert np.all(suggested <= upper + 1e-7)


class TestOracle:

    async def test_oracle_at_least_as_good_as_uncoordinated(self, tiny_scenario):
        oracle = centralized_oracle(tiny_scenario)
        baseline = await run_uncoordinated(tiny_scenario, workers=1)
        assert oracle.mode == "oracle"
        assert joint_objective(oracle) <= joint_objective(baseline) + 1e-9

    def test_too_large(self, reference_scenario):
        with pytest.raises(TooLarge):
            centralized_oracle(reference_scenario)

    async def test_plain_coordination_matches_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            scenario = _battery_only_scenario(rng)
            oracle = centralized_oracle(scenario)
            coordinated = await run_coordinated(scenario, "plain", workers=1)
            assert coordinated.converged
            np.testing.assert_allclose(coordinated.loads, oracle.loads, atol=1e-3)


class TestCoordinator:

    async def test_baseline_is_cached(self, tiny_scenario, config):
        async with Coordinator(config) as coordinator:
            first = await coordinator.run(tiny_scenario, "uncoordinated")
            second = await coordinator.run(tiny_scenario, "uncoordinated")
        assert first is second

    async def test_iteration_override(self, tiny_scenario):
        async with Coordinator(Config(workers=2, max_iters_override=3)) as coordinator:
            result = await coordinator.run(tiny_scenario, "global")
        assert len(result.iterations) <= 3

    async def test_oracle_mode(self, tiny_scenario, config):
        async with Coordinator(config) as coordinator:
            result = await coordinator.run(tiny_scenario, "oracle")
        assert result.mode == "oracle"

    async def test_unknown_mode(self, tiny_scenario, config):
        async with Coordinator(config) as coordinator:
            with pytest.raises(ValueError):
                await coordinator.run(tiny_scenario, "chaos")
