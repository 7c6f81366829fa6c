"""Run results and the network/economics post-processing shared by every run mode."""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from gridsched.coordinator.admm import IterationRecord
from gridsched.dno.economics import dno_profit, realtime_cost
from gridsched.hems.battery import stage_cost
from gridsched.hems.solver import HouseholdSchedule
from gridsched.loadflow.network import build_network
from gridsched.loadflow.sweep import solve_load_flow
from gridsched.metrics.bundle import MetricsBundle, compute_metrics
from gridsched.model.scenario import Scenario
from gridsched.tariff.pricing import dayahead_cost
from gridsched.tariff.schedule import PriceSchedule

logger = logging.getLogger("coordinator")

MODES = ("uncoordinated", "plain", "global", "individualized", "oracle")


@dataclass(frozen=True)
class NetworkSeries:
    total_load: np.ndarray      # T, homes + losses
    losses: np.ndarray          # T
    line_current: np.ndarray    # T x lines
    realtime_cost: np.ndarray   # T


@dataclass(frozen=True)
class DnoCosts:
    dayahead_cost: float
    realtime_cost: float
    bills_total: float
    profit: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class Trace:
    """Customer loads and operator suggestions after every iteration."""
    loads: Tuple[np.ndarray, ...]
    suggested: Tuple[np.ndarray, ...]


@dataclass(frozen=True)
class RunResult:
    mode: str
    scenario: Scenario
    schedules: Tuple[HouseholdSchedule, ...]
    prices: PriceSchedule
    bills: np.ndarray
    planned: np.ndarray
    network: NetworkSeries
    dno_costs: DnoCosts
    metrics: MetricsBundle
    iterations: Tuple[IterationRecord, ...] = ()
    converged: bool = True
    trace: Optional[Trace] = None

    @property
    def loads(self) -> np.ndarray:
        """H x T net loads of the schedules."""
        if not self.schedules:
            return np.zeros((0, self.scenario.grid.num_slots))
        return np.vstack([s.net_load_kw for s in self.schedules])

    @property
    def home_ids(self) -> Tuple[int, ...]:
        return tuple(s.home_id for s in self.schedules)


def compute_bills(loads: np.ndarray, prices: PriceSchedule, home_ids: Sequence[int], slot_hours: float) -> np.ndarray:
    bills = [
        float(np.sum(stage_cost(loads[h], prices.buy_for(home_id), prices.fit_for(home_id), slot_hours)))
        for h, home_id in enumerate(home_ids)
    ]
    return np.array(bills, dtype=float)


def network_series(scenario: Scenario, loads: np.ndarray, planned: np.ndarray) -> NetworkSeries:
    """Exact load flow of the home loads, slot by slot."""
    T = scenario.grid.num_slots
    net = build_network(scenario.feeder)
    node_loads = net.node_loads(scenario.home_nodes(), loads) if loads.size else np.zeros((T, net.num_nodes))
    flows = [solve_load_flow(scenario.feeder, row) for row in node_loads]
    losses = np.array([f.total_loss_kw for f in flows])
    currents = np.vstack([f.line_current_pu for f in flows]) if net.num_lines else np.zeros((T, 0))
    total = (loads.sum(axis=0) if loads.size else np.zeros(T)) + losses
    rt = realtime_cost(total, planned, scenario.tariff.series("rt_buy", T), scenario.tariff.series("rt_sell", T),
                       scenario.grid.slot_hours)
    return NetworkSeries(total_load=total, losses=losses, line_current=currents, realtime_cost=np.asarray(rt))


def assemble_result(
    mode: str,
    scenario: Scenario,
    schedules: Sequence[HouseholdSchedule],
    prices: PriceSchedule,
    planned: np.ndarray,
    baseline_bills: Optional[np.ndarray] = None,
    iterations: Sequence[IterationRecord] = (),
    converged: bool = True,
    trace: Optional[Trace] = None,
) -> RunResult:
    schedules = tuple(schedules)
    T = scenario.grid.num_slots
    loads = np.vstack([s.net_load_kw for s in schedules]) if schedules else np.zeros((0, T))
    bills = compute_bills(loads, prices, scenario.home_ids, scenario.grid.slot_hours)
    network = network_series(scenario, loads, planned)
    day_ahead = dayahead_cost(planned, scenario.tariff)
    rt_total = float(np.sum(network.realtime_cost))
    bills_total = float(np.sum(bills))
    costs = DnoCosts(
        dayahead_cost=day_ahead,
        realtime_cost=rt_total,
        bills_total=bills_total,
        profit=dno_profit(bills_total, day_ahead, rt_total),
    )
    metrics = compute_metrics(
        total_load=network.total_load,
        losses=network.losses,
        line_current=network.line_current,
        realtime_cost_cents=rt_total,
        bills=bills,
        profit_cents=costs.profit,
        baseline_bills=baseline_bills,
        slot_hours=scenario.grid.slot_hours,
    )
    return RunResult(
        mode=mode,
        scenario=scenario,
        schedules=schedules,
        prices=prices,
        bills=bills,
        planned=np.asarray(planned, dtype=float),
        network=network,
        dno_costs=costs,
        metrics=metrics,
        iterations=tuple(iterations),
        converged=converged,
        trace=trace,
    )
