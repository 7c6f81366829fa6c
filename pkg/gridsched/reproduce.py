"""
Experiment studies on the reference feeder.

Each study runs the modes it compares through a shared Coordinator and writes its
comparison tables under `<out>/<study>/`. Nothing is plotted; every file is plot-ready CSV.
"""

import logging
from typing import Awaitable, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from gridsched.coordinator.engine import Coordinator
from gridsched.coordinator.result import RunResult
from gridsched.metrics.sweeps import DEFAULT_W_VALUES, w_sweep, with_incentive_w
from gridsched.metrics.tables import savings_table, sigma_curve
from gridsched.model.scenario import Scenario
from gridsched.model.validation import validate_scenario
from gridsched.results.writer import ResultWriter, iterations_frame, prices_frame

logger = logging.getLogger("gridsched")

BINDING_FRACTION = 0.9
INDIVIDUALIZED_W = 0.35
SIGMA_RATIOS = (0.1, 0.3, 0.5)


async def _network_load(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    unc = await coordinator.run(scenario, "uncoordinated")
    coord = await coordinator.run(scenario, "global")
    frame = pd.DataFrame({
        "slot": np.arange(scenario.grid.num_slots),
        "planned": unc.planned,
        "uncoordinated": unc.network.total_load,
        "coordinated": coord.network.total_load,
    })
    summary = {
        "uncoordinated": {"par": unc.metrics.par, "realtime_cost": unc.dno_costs.realtime_cost},
        "coordinated": {"par": coord.metrics.par, "realtime_cost": coord.dno_costs.realtime_cost,
                        "converged": coord.converged},
    }
    return [
        writer.write_table("figure6/network_load.csv", frame),
        writer.write_json("figure6/summary.json", summary),
    ]


def binding_limits(scenario: Scenario, baseline: RunResult, fraction: float = BINDING_FRACTION) -> Scenario:
    """Sets each line limit to `fraction` of that line's peak uncoordinated current."""
    peaks = np.max(np.abs(baseline.network.line_current), axis=0)
    document = scenario.model_dump()
    for line, peak in zip(document["feeder"]["lines"], peaks):
        line["current_limit_pu"] = max(fraction * float(peak), 1e-9)
    return validate_scenario(document)


async def _line_loading(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    unc = await coordinator.run(scenario, "uncoordinated")
    limited = binding_limits(scenario, unc)
    coord = await coordinator.run(limited, "global")
    limits = limited.feeder.current_limits()
    rows = []
    for i, limit in enumerate(limits):
        for t in range(scenario.grid.num_slots):
            rows.append({
                "slot": t,
                "line": i,
                "limit_pu": limit,
                "uncoordinated_pu": unc.network.line_current[t, i],
                "coordinated_pu": coord.network.line_current[t, i],
            })
    excess = np.abs(coord.network.line_current) - limits[None, :]
    summary = {
        "binding_fraction": BINDING_FRACTION,
        "max_violation_pu": float(np.max(excess, initial=0.0)),
        "converged": coord.converged,
    }
    return [
        writer.write_table("figure8/line_currents.csv", pd.DataFrame(rows)),
        writer.write_json("figure8/summary.json", summary),
    ]


async def _savings(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    unc = await coordinator.run(scenario, "uncoordinated")
    coord = await coordinator.run(scenario, "global")
    return [writer.write_table("table2/savings.csv", savings_table(unc, coord))]


async def _incentive_comparison(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    scenario = with_incentive_w(scenario, INDIVIDUALIZED_W)
    unc = await coordinator.run(scenario, "uncoordinated")
    global_run = await coordinator.run(scenario, "global")
    individual_run = await coordinator.run(scenario, "individualized")
    left = savings_table(unc, global_run)
    right = savings_table(unc, individual_run)
    frame = pd.DataFrame({
        "home": left["home"],
        "bill_before": left["bill_before"],
        "bill_global": left["bill_after"],
        "saving_pct_global": left["saving_pct"],
        "bill_individualized": right["bill_after"],
        "saving_pct_individualized": right["saving_pct"],
    })
    return [
        writer.write_table("table3/savings.csv", frame),
        writer.write_table("table3/prices_global.csv", prices_frame(global_run)),
        writer.write_table("table3/prices_individualized.csv", prices_frame(individual_run)),
    ]


async def _w_effect(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    table = await w_sweep(
        scenario,
        DEFAULT_W_VALUES,
        executor=coordinator.executor,
        baseline=await coordinator.baseline(scenario),
        max_iters=coordinator.max_iters_for(scenario),
    )
    return [writer.write_table("figure14/w_sweep.csv", table)]


async def _battery_profiles(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    runs = [await coordinator.run(scenario, mode) for mode in ("uncoordinated", "global")]
    rows = []
    for run in runs:
        for schedule, home in zip(run.schedules, scenario.homes):
            if home.battery is None:
                continue
            for t in range(scenario.grid.num_slots):
                rows.append({
                    "mode": run.mode,
                    "home": home.id,
                    "slot": t,
                    "battery_step": schedule.battery_action[t],
                    "battery_power_kw": schedule.battery_power_kw[t],
                    "soc": schedule.soc[t + 1],
                })
    columns = ["mode", "home", "slot", "battery_step", "battery_power_kw", "soc"]
    return [writer.write_table("figure10/battery.csv", pd.DataFrame(rows, columns=columns))]


def trace_frame(result: RunResult, slots: Sequence[int]) -> pd.DataFrame:
    rows = []
    if result.trace is not None:
        for k, (loads, suggested) in enumerate(zip(result.trace.loads, result.trace.suggested), start=1):
            for h, home_id in enumerate(result.scenario.home_ids):
                for t in slots:
                    rows.append({"k": k, "home": home_id, "slot": t,
                                 "load_kw": loads[h, t], "suggested_kw": suggested[h, t]})
    return pd.DataFrame(rows, columns=["k", "home", "slot", "load_kw", "suggested_kw"])


async def _load_trace(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    unc = await coordinator.run(scenario, "uncoordinated")
    coord = await coordinator.run(scenario, "global")
    total = unc.network.total_load
    slots = sorted({int(np.argmax(total)), int(np.argmin(total))})
    return [writer.write_table("figure11/trace.csv", trace_frame(coord, slots))]


async def _convergence(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    coord = await coordinator.run(scenario, "global")
    return [writer.write_table("figure12/iterations.csv", iterations_frame(coord))]


async def _sigma(scenario: Scenario, coordinator: Coordinator, writer: ResultWriter) -> List[str]:
    frames = []
    for ratio in SIGMA_RATIOS:
        frame = sigma_curve(ratio, DEFAULT_W_VALUES)
        frame.insert(0, "ratio", ratio)
        frames.append(frame)
    return [writer.write_table("figure13/sigma.csv", pd.concat(frames, ignore_index=True))]


Study = Callable[[Scenario, Coordinator, ResultWriter], Awaitable[List[str]]]

STUDIES: Dict[str, Study] = {
    "figure6": _network_load,
    "figure8": _line_loading,
    "table2": _savings,
    "table3": _incentive_comparison,
    "figure14": _w_effect,
    "figure10": _battery_profiles,
    "figure11": _load_trace,
    "figure12": _convergence,
    "figure13": _sigma,
}


async def reproduce(study: str, scenario: Scenario, coordinator: Coordinator,
                    writer: Optional[ResultWriter] = None, out_dir: str = "results") -> List[str]:
    """Runs one study and returns the paths it wrote."""
    if study not in STUDIES:
        raise ValueError(f"unknown study {study!r}; expected one of {tuple(STUDIES)}")
    writer = writer or ResultWriter(out_dir)
    logger.info(f"Reproducing {study}")
    paths = await STUDIES[study](scenario, coordinator, writer)
    logger.info(f"{study}: wrote {len(paths)} files")
    return paths
