from gridsched.tariff.schedule import PriceSchedule
from gridsched.tariff.pricing import (
    average_net_demand,
    base_price_schedule,
    day_ahead_price,
    dayahead_cost,
    forecast_demand,
    planned_demand,
)
from gridsched.tariff.incentives import (
    LoadGap,
    branch_magnitude,
    global_adjustments,
    individual_adjustments,
    price_gap,
    reward_coeff_global,
    reward_coeff_individual,
)

__all__ = [
    "PriceSchedule",
    "average_net_demand",
    "base_price_schedule",
    "day_ahead_price",
    "dayahead_cost",
    "forecast_demand",
    "planned_demand",
    "LoadGap",
    "branch_magnitude",
    "global_adjustments",
    "individual_adjustments",
    "price_gap",
    "reward_coeff_global",
    "reward_coeff_individual",
]
