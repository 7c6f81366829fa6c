"""Tests for operator economics, the halfspace projection and the operator step."""

import numpy as np
import pytest

from gridsched.dno.economics import dno_profit, realtime_cost, rebates
from gridsched.dno.projection import project_box_halfspace, project_halfspaces
from gridsched.dno.subproblem import FairnessTerms, dno_objective, dno_update
from gridsched.errors import ZeroBill
from gridsched.hems.battery import stage_cost
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import solve_batch, solve_load_flow
from gridsched.model.scenario import FeederLine, FeederTopology, TariffParams


@pytest.fixture
def lossless_feeder():
    """One home behind a near-zero resistance line: losses vanish, limits never bind."""
    return FeederTopology(
        nodes=(0, 1),
        lines=(FeederLine(from_node=0, to_node=1, resistance_pu=1e-6, reactance_pu=0.0, current_limit_pu=10.0),),
        load_power_factor=1.0,
    )


class TestEconomics:

    def test_realtime_cost_sides(self):
        assert realtime_cost(12.0, 10.0, 2.0, 3.0) == pytest.approx(4.0)
        assert realtime_cost(8.0, 10.0, 2.0, 3.0) == pytest.approx(6.0)
        assert realtime_cost(10.0, 10.0, 2.0, 3.0) == 0.0

    def test_realtime_cost_vector(self):
        cost = realtime_cost(np.array([11.0, 9.0]), np.array([10.0, 10.0]), 2.0, 2.0, slot_hours=0.5)
        np.testing.assert_allclose(cost, [1.0, 1.0])

    def test_profit(self):
        assert dno_profit(500.0, 300.0, 50.0) == 150.0

    def test_rebates(self):
        r = rebates([10.0, 10.0, 10.0], [9.0, 8.0, 7.0])
        np.testing.assert_allclose(r.values, [0.1, 0.2, 0.3])
        assert r.average == pytest.approx(0.2)
        assert r.spread == pytest.approx(0.2)

    def test_zero_bill(self):
        with pytest.raises(ZeroBill):
            rebates([10.0, 0.0], [9.0, 1.0])


class TestProjection:

    def test_box_corner(self):
        y, ok = project_halfspaces(np.array([2.0, 2.0]), np.eye(2), np.array([1.0, 1.0]))
        assert ok
        np.testing.assert_allclose(y, [1.0, 1.0], atol=1e-8)

    def test_single_halfspace(self):
        y, ok = project_halfspaces(np.array([1.0, 1.0]), np.array([[1.0, 1.0]]), np.array([1.0]))
        assert ok
        np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-8)

    def test_feasible_point_unchanged(self):
        point = np.array([0.2, -3.0])
        y, ok = project_halfspaces(point, np.eye(2), np.array([1.0, 1.0]))
        assert ok
        np.testing.assert_array_equal(y, point)

    def test_zero_normal_ignored(self):
        y, ok = project_halfspaces(np.array([3.0]), np.array([[0.0], [1.0]]), np.array([-1.0, 2.0]))
        assert ok
        np.testing.assert_allclose(y, [2.0], atol=1e-8)

    def test_intersection_of_two_slanted_halfspaces(self):
        normals = np.array([[1.0, 0.0], [1.0, 1.0]])
        y, ok = project_halfspaces(np.array([2.0, 2.0]), normals, np.array([1.0, 1.0]))
        assert ok
        np.testing.assert_allclose(y, [0.5, 0.5], atol=1e-6)

    def test_halfspace_with_box(self):
        y, ok = project_halfspaces(np.array([2.0, 2.0]), np.array([[1.0, 1.0]]), np.array([1.0]),
                                   lower=np.array([-np.inf, 0.8]))
        assert ok
        np.testing.assert_allclose(y, [0.2, 0.8], atol=1e-6)


class TestBoxHalfspaceProjection:

    def test_closed_form_without_clipping(self):
        y, ok = project_box_halfspace(np.array([1.0, 1.0]), np.array([1.0, 1.0]), 1.0)
        assert ok
        np.testing.assert_allclose(y, [0.5, 0.5])

    def test_clipped_coordinates(self):
        y, ok = project_box_halfspace(np.array([3.0, 0.0]), np.array([1.0, 1.0]), 1.0,
                                      lower=np.array([0.0, 0.0]), upper=np.array([np.inf, 0.2]))
        assert ok
        np.testing.assert_allclose(y, [1.0, 0.0], atol=1e-9)

    def test_matches_dykstra(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            z = rng.normal(0.0, 3.0, 4)
            n = rng.uniform(0.5, 1.5, 4)
            lower, upper = -rng.uniform(0.0, 1.0, 4), rng.uniform(0.0, 1.0, 4)
            exact, ok = project_box_halfspace(z, n, 0.0, lower, upper)
            cyclic, _ = project_halfspaces(z, n[None, :], np.array([0.0]), max_iters=5000, tol=1e-12,
                                           lower=lower, upper=upper)
            assert ok
            np.testing.assert_allclose(exact, cyclic, atol=1e-5)

    def test_empty_set_returns_box_minimizer(self):
        y, ok = project_box_halfspace(np.zeros(2), np.array([1.0, -1.0]), -5.0,
                                      lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]))
        assert not ok
        np.testing.assert_array_equal(y, [-1.0, 1.0])


class TestOperatorStep:

    @pytest.mark.parametrize("load, expected", [(10.0, 8.0), (1.0, 3.0), (6.0, 5.0)])
    def test_soft_threshold_around_plan(self, lossless_feeder, load, expected):
        iterate = dno_update(
            loads=np.array([[load]]),
            duals=np.zeros((1, 1)),
            rho=1.0,
            eps_adjust=np.zeros(1),
            home_nodes=(1,),
            feeder=lossless_feeder,
            planned=np.array([5.0]),
            tariff=TariffParams(rt_buy=2.0, rt_sell=2.0),
        )
        assert iterate.suggested_loads[0, 0] == pytest.approx(expected, abs=1e-5)
        assert not iterate.stalled

    def test_incentive_shifts_center(self, lossless_feeder):
        iterate = dno_update(
            loads=np.array([[20.0]]),
            duals=np.array([[1.0]]),
            rho=2.0,
            eps_adjust=np.array([4.0]),
            home_nodes=(1,),
            feeder=lossless_feeder,
            planned=np.array([5.0]),
            tariff=TariffParams(rt_buy=2.0, rt_sell=2.0),
        )
        # center 20 + 1 - 4 / 2 = 19, then the buy-side slope moves it by 2 / 2
        assert iterate.suggested_loads[0, 0] == pytest.approx(18.0, abs=1e-5)

    def test_line_limit_enforced(self, chain_feeder):
        limited = chain_feeder.model_copy(update={
            "lines": (
                chain_feeder.lines[0].model_copy(update={"current_limit_pu": 0.06}),
                chain_feeder.lines[1],
            )
        })
        loads = np.array([[50.0, 10.0], [50.0, 10.0]])
        iterate = dno_update(
            loads=loads,
            duals=np.zeros_like(loads),
            rho=0.01,
            eps_adjust=np.zeros(2),
            home_nodes=(1, 2),
            feeder=limited,
            planned=np.array([100.0, 20.0]),
            tariff=TariffParams(),
        )
        assert iterate.max_overload <= 1e-6
        assert iterate.suggested_loads[:, 0].sum() < 100.0
        net = build_network(limited)
        flow = solve_batch(limited, net.node_loads((1, 2), iterate.suggested_loads))
        assert np.max(np.abs(flow.line_current)[:, 0]) <= 0.06 + 5e-3

    def test_never_worse_than_reported_loads(self, chain_feeder):
        rng = np.random.default_rng(3)
        tariff = TariffParams(rt_buy=2.0, rt_sell=1.5)
        for _ in range(10):
            loads = rng.uniform(0.0, 5.0, (2, 3))
            duals = rng.normal(0.0, 0.5, (2, 3))
            planned = rng.uniform(2.0, 8.0, 3)
            eps = rng.normal(0.0, 0.5, 3)
            iterate = dno_update(loads, duals, 0.5, eps, (1, 2), chain_feeder, planned, tariff)
            net = build_network(chain_feeder)
            losses = np.array([solve_load_flow(chain_feeder, row).total_loss_kw
                               for row in net.node_loads((1, 2), loads)])
            start = dno_objective(loads, losses, loads, duals, 0.5, eps, planned, tariff, 1.0)
            assert iterate.objective_value <= start + 1e-6

    def test_fairness_does_not_raise_penalized_objective(self, chain_feeder):
        loads = np.array([[4.0, 1.0, 3.0], [1.0, 5.0, 2.0]])
        buy = np.full((2, 3), 20.0)
        fit = np.full((2, 3), 6.0)
        fairness = FairnessTerms(bound=0.0, weight=50.0, bills_uncoordinated=np.array([180.0, 150.0]),
                                 buy=buy, fit=fit)
        args = (loads, np.zeros_like(loads), 0.5, np.zeros(3), (1, 2), chain_feeder, np.array([4.0, 5.0, 6.0]),
                TariffParams())

        def penalty(y):
            bills = np.sum(stage_cost(y, buy, fit, 1.0), axis=1)
            spread = rebates(fairness.bills_uncoordinated, bills).spread
            return fairness.weight * max(spread - fairness.bound, 0.0) ** 2

        plain = dno_update(*args)
        fair = dno_update(*args, fairness=fairness)
        assert fair.fairness_penalty == pytest.approx(penalty(fair.suggested_loads))
        fair_total = fair.objective_value + fair.fairness_penalty
        assert fair_total <= plain.objective_value + penalty(plain.suggested_loads) + 1e-9

    def test_stiff_coupling_returns_reported_loads(self, chain_feeder):
        rng = np.random.default_rng(8)
        loads = rng.uniform(0.5, 5.0, (2, 4))
        iterate = dno_update(loads, np.zeros_like(loads), 1e6, rng.normal(0.0, 2.0, 4), (1, 2), chain_feeder,
                             rng.uniform(2.0, 8.0, 4), TariffParams())
        assert np.max(np.abs(iterate.suggested_loads - loads)) <= 1e-3

    def test_loads_on_plan_are_a_fixed_point(self, chain_feeder):
        loads = np.array([[2.0, 3.5, 1.0], [1.5, 0.5, 4.0]])
        net = build_network(chain_feeder)
        losses = np.array([solve_load_flow(chain_feeder, row, tol=1e-12).total_loss_kw
                           for row in net.node_loads((1, 2), loads)])
        planned = loads.sum(axis=0) + losses
        iterate = dno_update(loads, np.zeros_like(loads), 1.0, np.zeros(3), (1, 2), chain_feeder, planned,
                             TariffParams())
        np.testing.assert_allclose(iterate.suggested_loads, loads, atol=1e-4)

    def test_large_incentive_stays_in_envelope(self, chain_feeder):
        loads = np.array([[2.0, 3.0, 1.0], [1.0, 0.5, 2.5]])
        lower, upper = np.zeros_like(loads), loads + 2.0
        for eps in (1e5, -1e5):
            iterate = dno_update(loads, np.zeros_like(loads), 1e-3, np.full(3, eps), (1, 2), chain_feeder,
                                 np.array([3.0, 3.5, 3.5]), TariffParams(), bounds=(lower, upper))
            y = iterate.suggested_loads
            assert np.all(np.isfinite(y))
            assert np.all(y >= lower - 1e-9)
            assert np.all(y <= upper + 1e-9)
            assert np.isfinite(iterate.objective_value)

    def test_envelope_can_be_a_single_point(self, chain_feeder):
        loads = np.array([[2.0, 3.0], [1.0, 0.5]])
        pinned = np.array([[1.0, 1.0], [2.0, 2.0]])
        iterate = dno_update(loads, np.zeros_like(loads), 1.0, np.zeros(2), (1, 2), chain_feeder,
                             np.array([5.0, 5.0]), TariffParams(), bounds=(pinned, pinned))
        np.testing.assert_allclose(iterate.suggested_loads, pinned)

    def test_heavy_fairness_weight_at_small_rho_stays_finite(self, chain_feeder):
        loads = np.array([[4.0, 1.0, 3.0], [1.0, 5.0, 2.0]])
        fairness = FairnessTerms(bound=0.0, weight=1e9, bills_uncoordinated=np.array([180.0, 150.0]),
                                 buy=np.full((2, 3), 20.0), fit=np.full((2, 3), 6.0))
        iterate = dno_update(loads, np.zeros_like(loads), 1e-6, np.zeros(3), (1, 2), chain_feeder,
                             np.array([4.0, 5.0, 6.0]), TariffParams(), fairness=fairness)
        assert np.all(np.isfinite(iterate.suggested_loads))
        assert np.isfinite(iterate.fairness_penalty)
        assert np.isfinite(iterate.objective_value)

    def test_rejects_bad_inputs(self, chain_feeder):
        loads = np.ones((2, 3))
        with pytest.raises(ValueError):
            dno_update(loads, np.zeros((2, 3)), 0.0, np.zeros(3), (1, 2), chain_feeder, np.ones(3), TariffParams())
        with pytest.raises(ValueError):
            dno_update(loads, np.zeros((1, 3)), 1.0, np.zeros(3), (1, 2), chain_feeder, np.ones(3), TariffParams())

    def test_no_homes(self, chain_feeder):
        iterate = dno_update(np.zeros((0, 3)), np.zeros((0, 3)), 1.0, np.zeros(3), (), chain_feeder, np.ones(3),
                             TariffParams())
        assert iterate.suggested_loads.shape == (0, 3)
        np.testing.assert_array_equal(iterate.suggested_losses, 0.0)
