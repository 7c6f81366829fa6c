"""
Result files for a run: scenario echo, network and price series, per-home schedules,
iteration log and metrics.

Every file is written to `<name>.tmp` first and renamed into place, so a reader never
sees a half-written file. Nothing time-dependent is written: the same run always yields
byte-identical files.
"""

import json
import logging
import os
from typing import Any, Dict

import numpy as np
import pandas as pd

from gridsched.coordinator.result import RunResult
from gridsched.hems.solver import HouseholdSchedule
from gridsched.model.io import scenario_to_json

logger = logging.getLogger("results")

ITERATION_COLUMNS = ["k", "rho", "primal_norm", "dual_norm", "dno_objective", "total_bills",
                     "relinearizations", "stalled"]


def _to_plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_to_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def network_frame(result: RunResult) -> pd.DataFrame:
    net = result.network
    frame = pd.DataFrame({
        "slot": np.arange(result.scenario.grid.num_slots),
        "planned": result.planned,
        "total_load": net.total_load,
        "losses": net.losses,
        "realtime_cost": net.realtime_cost,
    })
    for i in range(net.line_current.shape[1]):
        frame[f"line_{i}_current_pu"] = net.line_current[:, i]
    return frame


def schedule_frame(schedule: HouseholdSchedule) -> pd.DataFrame:
    """One row per slot; `soc` is the state of charge at the end of the slot."""
    T = schedule.net_load_kw.shape[0]
    frame = pd.DataFrame({
        "slot": np.arange(T),
        "net_load_kw": schedule.net_load_kw,
        "battery_step": schedule.battery_action,
        "battery_power_kw": schedule.battery_power_kw,
        "soc": schedule.soc[1:],
    })
    for k in range(schedule.appliance_on.shape[0]):
        frame[f"appliance_{k}_on"] = schedule.appliance_on[k].astype(int)
    return frame


def prices_frame(result: RunResult) -> pd.DataFrame:
    prices = result.prices
    frame = pd.DataFrame({"slot": np.arange(prices.num_slots), "base": prices.base, "fit": prices.fit})
    if prices.individualized:
        frame["adjust"] = prices.adjust.mean(axis=0)
        frame["fit_adjust"] = prices.fit_adjust.mean(axis=0)
        for home_id in prices.home_ids:
            frame[f"adjust_{home_id}"] = prices.adjust_for(home_id)
            frame[f"fit_adjust_{home_id}"] = prices.fit_adjust_for(home_id)
    else:
        frame["adjust"] = prices.adjust
        frame["fit_adjust"] = prices.fit_adjust
    return frame[["slot", "base", "adjust", "fit", "fit_adjust"]
                 + [c for c in frame.columns if c.startswith(("adjust_", "fit_adjust_"))]]


def iterations_frame(result: RunResult) -> pd.DataFrame:
    rows = [
        [r.k, r.rho, r.primal_norm, r.dual_norm, r.dno_objective, r.total_bills, r.relinearizations, int(r.stalled)]
        for r in result.iterations
    ]
    return pd.DataFrame(rows, columns=ITERATION_COLUMNS)


def metrics_document(result: RunResult) -> Dict[str, Any]:
    document = result.metrics.to_dict()
    document.update({
        "mode": result.mode,
        "converged": result.converged,
        "iterations": len(result.iterations),
        "dno_costs": result.dno_costs.to_dict(),
    })
    return _to_plain(document)


class ResultWriter:
    """Writes run results and study tables below one output directory."""

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self._ensure_directory(out_dir)

    @staticmethod
    def _ensure_directory(directory: str):
        if directory:
            os.makedirs(directory, exist_ok=True)

    def _write_text(self, relative_path: str, text: str) -> str:
        path = os.path.join(self.out_dir, relative_path)
        self._ensure_directory(os.path.dirname(path))
        tmp_path = path + ".tmp"
        with open(tmp_path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
        logger.debug(f"Wrote {path}")
        return path

    def write_table(self, relative_path: str, frame: pd.DataFrame) -> str:
        return self._write_text(relative_path, frame.to_csv(index=False, lineterminator="\n"))

    def write_json(self, relative_path: str, document: Any) -> str:
        return self._write_text(relative_path, json.dumps(_to_plain(document), indent=2, sort_keys=True) + "\n")

    def write_run(self, result: RunResult, subdir: str = "") -> str:
        """Writes every per-run file under `<out>/<subdir or mode>/` and returns that directory."""
        base = subdir or result.mode
        self._write_text(os.path.join(base, "scenario.json"), scenario_to_json(result.scenario))
        self.write_table(os.path.join(base, "network.csv"), network_frame(result))
        for schedule in result.schedules:
            self.write_table(os.path.join(base, "schedules", f"home_{schedule.home_id}.csv"), schedule_frame(schedule))
        self.write_table(os.path.join(base, "prices.csv"), prices_frame(result))
        self.write_table(os.path.join(base, "iterations.csv"), iterations_frame(result))
        self.write_json(os.path.join(base, "metrics.json"), metrics_document(result))
        directory = os.path.join(self.out_dir, base)
        logger.info(f"Wrote {result.mode} results to {directory}")
        return directory
