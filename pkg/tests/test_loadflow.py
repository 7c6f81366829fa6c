"""Tests for the radial load flow and its sensitivities."""

import dataclasses
import math

import numpy as np
import pytest

from gridsched.errors import DivergenceError, NonRadialError, NotConvergedError
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import current_sensitivities, solve_batch, solve_load_flow
from gridsched.model.reference import reference_feeder
from gridsched.model.scenario import FeederLine, FeederTopology


class TestNetwork:

    def test_chain_structure(self, chain_feeder):
        net = build_network(chain_feeder)
        assert net.num_nodes == 3
        assert net.num_lines == 2
        np.testing.assert_array_equal(net.downstream, [[0, 1, 1], [0, 0, 1]])

    def test_node_loads_aggregate_homes(self, chain_feeder):
        net = build_network(chain_feeder)
        loads = net.node_loads((2, 2, 1), np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        np.testing.assert_allclose(loads, [[0.0, 5.0, 4.0], [0.0, 6.0, 6.0]])

    def test_non_radial_rejected(self):
        line = lambda a, b: FeederLine(from_node=a, to_node=b, resistance_pu=0.1, reactance_pu=0.1)  # noqa: E731
        feeder = FeederTopology.model_construct(
            nodes=(0, 1, 2), slack_node=0, lines=(line(0, 1), line(1, 2), line(2, 0)),
            base_mva=1.0, base_kv=0.4, load_power_factor=0.95,
        )
        with pytest.raises(NonRadialError):
            build_network(feeder)


class TestSolveLoadFlow:

    def test_two_node_closed_form(self, two_node_feeder):
        r, p = 0.01, 0.1   # 100 kW on a 1 MVA base
        solution = solve_load_flow(two_node_feeder, np.array([0.0, 100.0]), tol=1e-12, max_iter=200)
        current = (1.0 - math.sqrt(1.0 - 4.0 * r * p)) / (2.0 * r)
        assert solution.converged
        assert solution.line_current_pu[0] == pytest.approx(current, abs=1e-8)
        assert abs(solution.node_voltage_pu[1]) == pytest.approx(1.0 - r * current, abs=1e-8)
        assert solution.total_loss_kw == pytest.approx(current ** 2 * r * 1000.0, abs=1e-6)

    def test_power_balance(self, chain_feeder):
        loads = np.array([0.0, 40.0, 25.0])
        solution = solve_load_flow(chain_feeder, loads, tol=1e-12, max_iter=200)
        assert solution.converged
        assert solution.slack_power_kw == pytest.approx(loads.sum() + solution.total_loss_kw, abs=1e-5)

    def test_export_flows_back(self, chain_feeder):
        solution = solve_load_flow(chain_feeder, np.array([0.0, -30.0, -10.0]), tol=1e-12, max_iter=200)
        assert solution.slack_power_kw < 0
        assert solution.total_loss_kw > 0

    def test_no_load(self, chain_feeder):
        solution = solve_load_flow(chain_feeder, np.zeros(3))
        np.testing.assert_allclose(solution.line_current_pu, 0.0)
        np.testing.assert_allclose(np.abs(solution.node_voltage_pu), 1.0)
        assert solution.total_loss_kw == 0.0

    def test_slack_injection_ignored(self, chain_feeder):
        a = solve_load_flow(chain_feeder, np.array([0.0, 10.0, 10.0]))
        b = solve_load_flow(chain_feeder, np.array([500.0, 10.0, 10.0]))
        np.testing.assert_allclose(a.line_current_pu, b.line_current_pu)

    def test_wrong_shape(self, chain_feeder):
        with pytest.raises(ValueError):
            solve_load_flow(chain_feeder, np.zeros(2))

    def test_voltage_collapse(self):
        feeder = FeederTopology(
            nodes=(0, 1),
            lines=(FeederLine(from_node=0, to_node=1, resistance_pu=1.0, reactance_pu=0.0),),
            load_power_factor=1.0,
        )
        with pytest.raises(DivergenceError):
            solve_load_flow(feeder, np.array([0.0, 1000.0]))

    def test_iteration_cap_flags_non_convergence(self, chain_feeder):
        solution = solve_load_flow(chain_feeder, np.array([0.0, 80.0, 80.0]), tol=1e-15, max_iter=1)
        assert not solution.converged

    def test_batch_matches_single_solves(self, chain_feeder):
        rows = np.array([[0.0, 10.0, 5.0], [0.0, -4.0, 20.0], [0.0, 30.0, 0.0]])
        batch = solve_batch(chain_feeder, rows, tol=1e-12, max_iter=200)
        for row, current in zip(rows, batch.line_current):
            single = solve_load_flow(chain_feeder, row, tol=1e-12, max_iter=200)
            np.testing.assert_allclose(np.abs(current), single.line_current_pu, atol=1e-10)


class TestSensitivities:

    def test_match_finite_differences(self, chain_feeder):
        loads = np.array([0.0, 20.0, 30.0])
        base = solve_load_flow(chain_feeder, loads, tol=1e-13, max_iter=500)
        sens = current_sensitivities(chain_feeder, base)
        step = 0.5
        for n in (1, 2):
            up, down = loads.copy(), loads.copy()
            up[n] += step
            down[n] -= step
            hi = solve_load_flow(chain_feeder, up, tol=1e-13, max_iter=500)
            lo = solve_load_flow(chain_feeder, down, tol=1e-13, max_iter=500)
            np.testing.assert_allclose(
                sens.current[:, n], (hi.line_current_pu - lo.line_current_pu) / (2 * step), atol=1e-5
            )
            assert sens.loss[n] == pytest.approx((hi.total_loss_kw - lo.total_loss_kw) / (2 * step), abs=1e-4)

    def test_slack_column_is_zero(self, chain_feeder):
        base = solve_load_flow(chain_feeder, np.array([0.0, 20.0, 30.0]))
        sens = current_sensitivities(chain_feeder, base)
        np.testing.assert_array_equal(sens.current[:, 0], 0.0)
        assert sens.loss[0] == 0.0

    def test_upstream_load_barely_moves_downstream_line(self, chain_feeder):
        base = solve_load_flow(chain_feeder, np.array([0.0, 20.0, 30.0]))
        sens = current_sensitivities(chain_feeder, base)
        # node 1 is not fed through line 1
        assert abs(sens.current[1, 1]) < 1e-5
        assert sens.current[0, 1] > 0

    def test_downstream_load_raises_every_feeding_line(self, chain_feeder):
        base = solve_load_flow(chain_feeder, np.array([0.0, 20.0, 30.0]))
        sens = current_sensitivities(chain_feeder, base)
        assert sens.current[0, 2] > 0
        assert sens.current[1, 2] > 0

    def test_reference_chain_sensitivities_positive_downstream(self):
        feeder = reference_feeder(5)
        base = solve_load_flow(feeder, np.array([0.0, 1.5, 2.5, -1.0, 2.0, 3.0]))
        sens = current_sensitivities(feeder, base)
        for line in range(5):
            for node in range(line + 1, 6):
                assert sens.current[line, node] > 0, (line, node)

    def test_requires_converged_solution(self, chain_feeder):
        base = solve_load_flow(chain_feeder, np.array([0.0, 20.0, 30.0]))
        with pytest.raises(NotConvergedError):
            current_sensitivities(chain_feeder, dataclasses.replace(base, converged=False))
