"""Tests for day-ahead pricing, planned demand and incentive coefficients."""

import logging
import math

import numpy as np
import pytest

from gridsched.errors import LengthMismatch
from gridsched.model.scenario import Appliance, Home, TariffParams, TimeGrid
from gridsched.tariff.incentives import (
    LoadGap,
    branch_magnitude,
    global_adjustments,
    individual_adjustments,
    price_gap,
    reward_coeff_global,
    reward_coeff_individual,
)
from gridsched.tariff.pricing import (
    appliance_on_probability,
    base_price_schedule,
    day_ahead_price,
    dayahead_cost,
    forecast_demand,
    planned_demand,
)
from gridsched.tariff.schedule import PriceSchedule


class TestDayAhead:

    def test_price(self):
        assert day_ahead_price(10.0, TariffParams()) == pytest.approx(4.8 * (2 * 0.2 * 10 + 2))

    def test_price_vector(self):
        np.testing.assert_allclose(day_ahead_price(np.array([0.0, 5.0]), TariffParams()), [9.6, 19.2])

    def test_cost(self):
        assert dayahead_cost(np.array([1.0, 2.0]), TariffParams(const_c=0.5)) == pytest.approx(0.2 * 5 + 2 * 3 + 1.0)


class TestPlannedDemand:

    def test_forecast_sums_and_clamps(self, caplog):
        with caplog.at_level(logging.WARNING, logger="tariff"):
            g = forecast_demand([np.array([1.0, 2.0]), np.array([3.0, 4.0])], [0.1, 0.1], [0.0, 10.0])
        np.testing.assert_allclose(g, [4.1, 0.0])
        assert "clamping" in caplog.text

    def test_forecast_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            forecast_demand([np.ones(3)], np.zeros(2), np.zeros(2))

    def test_appliance_on_probability(self):
        home = Home(
            id=1, node=1,
            appliances=(Appliance(power_kw=1.0, job_length_slots=2, window_start=0, window_end=3),),
            pv_kw=(0.0,) * 4, base_load_kw=(1.0,) * 4,
        )
        prob = appliance_on_probability(home, TimeGrid(num_slots=4))
        np.testing.assert_allclose(prob[0], [1 / 3, 2 / 3, 2 / 3, 1 / 3])

    def test_explicit_forecast_wins(self, tiny_scenario):
        scenario = tiny_scenario.model_copy(update={"forecast_demand": (2.0, 3.0, 4.0, 5.0)})
        np.testing.assert_allclose(planned_demand(scenario), [2.0, 3.0, 4.0, 5.0])

    def test_expected_demand_includes_losses(self, tiny_scenario):
        planned = planned_demand(tiny_scenario)
        expected = 1.0 + 1.0 / 4 + 0.8  # home 1 slot 0 base + appliance share, home 2 net base
        assert planned[0] > expected
        assert planned[0] == pytest.approx(expected, abs=0.01)

    def test_base_schedule(self, tiny_scenario):
        prices = base_price_schedule(tiny_scenario)
        np.testing.assert_allclose(prices.base, day_ahead_price(planned_demand(tiny_scenario), tiny_scenario.tariff))
        np.testing.assert_allclose(prices.fit, 6.0)
        assert not prices.individualized


class TestCoefficients:

    def test_reward_when_more_load_wanted(self):
        assert reward_coeff_global(110.0, 100.0, 0.5) == pytest.approx(-math.expm1(0.2) / 0.5)

    def test_penalty_when_less_load_wanted(self):
        assert reward_coeff_global(90.0, 100.0, 0.5) == pytest.approx(0.5 * math.expm1(0.2))

    def test_fit_only_rewarded_on_reduction(self):
        assert reward_coeff_global(90.0, 100.0, 0.5, for_fit=True) == pytest.approx(-math.expm1(0.2) / 0.5)
        assert reward_coeff_global(110.0, 100.0, 0.5, for_fit=True) == 0.0

    def test_no_gap_no_incentive(self):
        assert reward_coeff_global(100.0, 100.0, 0.5) == 0.0

    def test_zero_baseline(self, caplog):
        with caplog.at_level(logging.WARNING, logger="tariff"):
            assert reward_coeff_global(5.0, 0.0, 0.5) == 0.0
        assert "Zero network load baseline" in caplog.text

    def test_cap(self):
        assert reward_coeff_global(300.0, 100.0, 0.1, cap=3.0) == -3.0

    def test_near_zero_baseline_relative_to_peak(self, caplog):
        desired = np.array([12.0, 2.0, 0.25])
        uncoordinated = np.array([10.0, 0.2, 0.05])
        with caplog.at_level(logging.WARNING, logger="tariff"):
            sigma = reward_coeff_global(desired, uncoordinated, 0.5, min_share=0.05)
        assert sigma[0] == pytest.approx(-math.expm1(0.4) / 0.5)
        np.testing.assert_array_equal(sigma[1:], [0.0, 0.0])
        assert "Zero network load baseline" in caplog.text

    def test_near_zero_threshold_is_per_home(self):
        suggested = np.array([[3.0, 0.4], [0.3, 0.3]])
        original = np.array([[2.0, 0.05], [0.2, 0.2]])
        sigma = reward_coeff_individual(suggested, original, np.array([1.0, 1.0]), 0.5, min_share=0.05)
        assert sigma[0, 1] == 0.0
        assert sigma[1, 0] == pytest.approx(-math.expm1(1.0) / 0.5)
        assert sigma[1, 1] == pytest.approx(-math.expm1(1.0) / 0.5)

    def test_default_tariff_bounds_adjustment(self):
        tariff = TariffParams()
        gap = LoadGap(desired=np.array([40.0, 0.5]), uncoordinated=np.array([10.0, 8.0]))
        adjust, fit_adjust = global_adjustments(gap, tariff)
        assert abs(adjust[0]) == pytest.approx(tariff.sigma_cap * 2.0)
        assert fit_adjust[1] == pytest.approx(tariff.sigma_cap * 2.0)
        assert np.all(np.isfinite(adjust))

    def test_individual_uses_home_ratio_and_network_sign(self):
        sigma = reward_coeff_individual(np.array([2.2]), np.array([2.0]), np.array([-5.0]), 0.5)
        assert sigma[0] == pytest.approx(0.5 * math.expm1(0.2))

    def test_branch_crossover(self):
        for w in (0.1, 0.35, 0.7):
            assert branch_magnitude(0.3, w, reward=True) > branch_magnitude(0.3, w, reward=False)
        assert branch_magnitude(0.3, 1.0, reward=True) == pytest.approx(branch_magnitude(0.3, 1.0, reward=False))

    def test_price_gap_uses_side_rate(self):
        assert price_gap(-0.4, 1.0, 2.0, 3.0) == pytest.approx(-0.8)
        assert price_gap(0.5, -1.0, 2.0, 3.0) == pytest.approx(1.5)
        assert price_gap(0.5, 0.0, 2.0, 3.0) == 0.0


class TestAdjustments:

    def test_global_signs(self):
        gap = LoadGap(desired=np.array([110.0, 90.0, 100.0]), uncoordinated=np.array([100.0, 100.0, 100.0]))
        adjust, fit_adjust = global_adjustments(gap, TariffParams(rt_buy=2.0, rt_sell=2.0))
        assert adjust[0] < 0 < adjust[1]
        assert adjust[2] == 0.0
        np.testing.assert_allclose(fit_adjust, [0.0, math.expm1(0.2) / 0.5 * 2.0, 0.0])

    def test_fit_adjust_never_negative(self):
        rng = np.random.default_rng(5)
        tariff = TariffParams(incentive_w=0.35)
        for _ in range(50):
            unc = rng.uniform(1.0, 10.0, 6)
            gap = LoadGap(desired=unc + rng.normal(0.0, 2.0, 6), uncoordinated=unc)
            _, fit_adjust = global_adjustments(gap, tariff)
            assert np.all(fit_adjust >= 0)
            suggested = rng.uniform(0.5, 3.0, (3, 6))
            _, fit_individual = individual_adjustments(suggested, rng.uniform(0.5, 3.0, (3, 6)), gap, tariff)
            assert fit_individual.shape == (3, 6)
            assert np.all(fit_individual >= 0)


class TestPriceSchedule:

    def test_individualized_rows(self):
        base = np.array([10.0, 12.0])
        prices = PriceSchedule.flat(base, np.array([6.0, 6.0]), (4, 9)).with_adjustments(
            np.array([[1.0, -1.0], [0.5, 0.0]]), np.zeros((2, 2))
        )
        assert prices.individualized
        np.testing.assert_allclose(prices.buy_for(9), [10.5, 12.0])
        with pytest.raises(ValueError):
            prices.buy_for()

    def test_flat_has_no_adjustment(self):
        prices = PriceSchedule.flat(np.array([10.0]), np.array([6.0]))
        assert prices.buy_for()[0] == 10.0
        assert prices.fit_for()[0] == 6.0
