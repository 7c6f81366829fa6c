"""
The five-home reference feeder.

Homes 1, 2 and 5 share one set of appliance windows, homes 3 and 4 share the all-day
9am-8pm window. Home 3 carries the PV + battery installation, home 4 PV only.
"""

from typing import Dict, List, Sequence, Tuple

from gridsched.model.profiles import synthesize_profiles
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

APPLIANCE_ENERGIES_KWH = (0.4, 0.8, 1.2, 1.6, 2.0, 2.5)

EVENING = (16, 22)      # 4pm-11pm
MIDDAY = (10, 15)       # 10am-4pm
MORNING = (5, 8)        # 5am-9am
DAYTIME = (9, 19)       # 9am-8pm

SHIFTED_WINDOWS = (EVENING, MIDDAY, MORNING, MORNING, MIDDAY, EVENING)
DAYTIME_WINDOWS = (DAYTIME,) * 6

HOME_WINDOWS: Dict[int, Tuple[Tuple[int, int], ...]] = {
    1: SHIFTED_WINDOWS,
    2: SHIFTED_WINDOWS,
    3: DAYTIME_WINDOWS,
    4: DAYTIME_WINDOWS,
    5: SHIFTED_WINDOWS,
}
BASE_SCALES = {1: 1.0, 2: 1.8, 3: 1.1, 4: 1.0, 5: 1.2}
PV_PEAKS_KW = {1: 0.0, 2: 0.0, 3: 6.0, 4: 4.7, 5: 0.0}

LINE_R_PU = 1.53
LINE_X_PU = 0.625


def reference_appliances(windows: Sequence[Tuple[int, int]], slot_hours: float = 1.0) -> Tuple[Appliance, ...]:
    return tuple(
        Appliance(
            name=f"appliance_{k + 1}",
            power_kw=energy / slot_hours,
            job_length_slots=1,
            window_start=start,
            window_end=end,
        )
        for k, (energy, (start, end)) in enumerate(zip(APPLIANCE_ENERGIES_KWH, windows))
    )


def reference_battery() -> Battery:
    return Battery(capacity_kwh=5.0, soc_initial=0.5, soc_terminal_min=0.5)


def reference_feeder(num_homes: int = 5) -> FeederTopology:
    """Chain feeder: slack 0 feeds node 1, node 1 feeds node 2, and so on."""
    lines: List[FeederLine] = [
        FeederLine(from_node=n, to_node=n + 1, resistance_pu=LINE_R_PU, reactance_pu=LINE_X_PU)
        for n in range(num_homes)
    ]
    return FeederTopology(nodes=tuple(range(num_homes + 1)), slack_node=0, lines=tuple(lines))


def build_reference_scenario(seed: int = 7) -> Scenario:
    grid = TimeGrid()
    homes = []
    for index, home_id in enumerate(sorted(HOME_WINDOWS)):
        base, pv = synthesize_profiles(seed + index, grid, PV_PEAKS_KW[home_id], BASE_SCALES[home_id])
        homes.append(
            Home(
                id=home_id,
                node=home_id,
                appliances=reference_appliances(HOME_WINDOWS[home_id], grid.slot_hours),
                battery=reference_battery() if home_id == 3 else None,
                pv_kw=tuple(float(v) for v in pv),
                base_load_kw=tuple(float(v) for v in base),
            )
        )
    scenario = Scenario(
        grid=grid,
        feeder=reference_feeder(len(homes)),
        homes=tuple(homes),
        tariff=TariffParams(),
        admm=AdmmParams(),
    )
    return validate_scenario(scenario)
