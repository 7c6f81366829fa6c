"""Shared test fixtures for gridsched tests."""

import pytest

from core.config import Config
from gridsched.model.reference import build_reference_scenario
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


@pytest.fixture
def config():
    """Returns a Config with test defaults (small pool, no iteration override)."""
    return Config(workers=2, output_dir="results", seed=7)


@pytest.fixture
def two_node_feeder():
    """Slack plus one load node, purely resistive, unity power factor."""
    return FeederTopology(
        nodes=(0, 1),
        slack_node=0,
        lines=(FeederLine(from_node=0, to_node=1, resistance_pu=0.01, reactance_pu=0.0),),
        load_power_factor=1.0,
    )


@pytest.fixture
def chain_feeder():
    """Slack 0 - 1 - 2."""
    return FeederTopology(
        nodes=(0, 1, 2),
        slack_node=0,
        lines=(
            FeederLine(from_node=0, to_node=1, resistance_pu=0.05, reactance_pu=0.02),
            FeederLine(from_node=1, to_node=2, resistance_pu=0.05, reactance_pu=0.02),
        ),
    )


@pytest.fixture
def small_battery():
    return Battery(capacity_kwh=2.0, soc_levels=5, step_min=-0.5, step_max=0.5, soc_initial=0.5,
                   soc_terminal_min=0.5)


@pytest.fixture
def tiny_scenario(chain_feeder, small_battery):
    """Two homes, four slots: one flexible appliance each, home 2 with PV and a battery."""
    homes = (
        Home(
            id=1,
            node=1,
            appliances=(Appliance(name="washer", power_kw=1.0, job_length_slots=1, window_start=0, window_end=3),),
            pv_kw=(0.0, 0.0, 0.0, 0.0),
            base_load_kw=(1.0, 1.5, 2.0, 1.2),
        ),
        Home(
            id=2,
            node=2,
            appliances=(Appliance(name="dryer", power_kw=0.6, job_length_slots=2, window_start=1, window_end=3),),
            battery=small_battery,
            pv_kw=(0.0, 0.5, 0.8, 0.0),
            base_load_kw=(0.8, 1.0, 1.6, 1.4),
        ),
    )
    return Scenario(
        grid=TimeGrid(num_slots=4),
        feeder=chain_feeder,
        homes=homes,
        tariff=TariffParams(),
        admm=AdmmParams(max_iters=40),
    )


@pytest.fixture
def tiny_document(tiny_scenario):
    """The tiny scenario as a plain JSON-compatible dict."""
    return tiny_scenario.model_dump(mode="json")


@pytest.fixture(scope="session")
def reference_scenario():
    return build_reference_scenario(seed=7)
