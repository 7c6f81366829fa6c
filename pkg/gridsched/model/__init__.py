from gridsched.model.scenario import (
    AdmmParams,
    Appliance,
    Battery,
    FeederLine,
    FeederTopology,
    Home,
    Scenario,
    TariffParams,
    TimeGrid,
)
from gridsched.model.validation import validate_scenario
from gridsched.model.profiles import synthesize_profiles
from gridsched.model.reference import build_reference_scenario
from gridsched.model.io import apply_overrides, load_scenario, override_scenario, save_scenario, scenario_to_json

__all__ = [
    "AdmmParams",
    "Appliance",
    "Battery",
    "FeederLine",
    "FeederTopology",
    "Home",
    "Scenario",
    "TariffParams",
    "TimeGrid",
    "validate_scenario",
    "synthesize_profiles",
    "build_reference_scenario",
    "apply_overrides",
    "load_scenario",
    "override_scenario",
    "save_scenario",
    "scenario_to_json",
]
