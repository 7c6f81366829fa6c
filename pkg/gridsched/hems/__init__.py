from gridsched.hems.battery import SocGrid, battery_power, build_soc_grid, stage_cost
from gridsched.hems.solver import (
    HouseholdSchedule,
    HouseholdSolver,
    ProximalTerms,
    household_solver,
    load_envelope,
    solve_household,
)
from gridsched.hems.enumerate import count_options, enumerate_schedules

__all__ = [
    "SocGrid",
    "battery_power",
    "build_soc_grid",
    "stage_cost",
    "HouseholdSchedule",
    "HouseholdSolver",
    "ProximalTerms",
    "household_solver",
    "load_envelope",
    "solve_household",
    "count_options",
    "enumerate_schedules",
]
