"""
Scenario types shared by every gridsched module.

All models are frozen pydantic models: once a scenario validates it can be handed to
worker threads without copying. Series are stored as tuples and exposed as numpy arrays
through helper methods.
"""

import logging
from typing import List, Optional, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger("model")

Series = Tuple[float, ...]
SeriesOrScalar = Union[float, Series]


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class TimeGrid(_Frozen):
    num_slots: int = Field(24, ge=1)
    slot_hours: float = Field(1.0, gt=0)


class Appliance(_Frozen):
    """Deferrable appliance: fixed power, uninterruptible job inside [window_start, window_end]."""
    name: str = ""
    power_kw: float = Field(gt=0)
    job_length_slots: int = Field(ge=1)
    window_start: int = Field(ge=0)
    window_end: int = Field(ge=0)

    @model_validator(mode="after")
    def _job_fits_window(self) -> "Appliance":
        span = self.window_end - self.window_start + 1
        if span < self.job_length_slots:
            raise ValueError(
                f"window [{self.window_start}, {self.window_end}] is shorter than "
                f"job length {self.job_length_slots}"
            )
        return self

    @property
    def latest_start(self) -> int:
        """Slot at which an unstarted appliance is forced on."""
        return self.window_end - self.job_length_slots + 1

    @property
    def energy_kwh_per_slot(self) -> float:
        return self.power_kw


class Battery(_Frozen):
    capacity_kwh: float = Field(gt=0)
    soc_min: float = Field(0.0, ge=0, le=1)
    soc_max: float = Field(1.0, ge=0, le=1)
    soc_initial: float = Field(0.5, ge=0, le=1)
    step_min: float = Field(-0.25, le=0)
    step_max: float = Field(0.25, ge=0)
    eff_charge: float = Field(0.95, gt=0, le=1)
    eff_discharge: float = Field(0.95, gt=0, le=1)
    soc_levels: int = Field(21, ge=2)
    soc_terminal_min: Optional[float] = Field(None, ge=0, le=1)

    @model_validator(mode="after")
    def _soc_ordering(self) -> "Battery":
        problems = []
        if not (self.soc_min <= self.soc_initial <= self.soc_max):
            problems.append(
                f"soc bounds must satisfy soc_min <= soc_initial <= soc_max "
                f"(got {self.soc_min}, {self.soc_initial}, {self.soc_max})"
            )
        if self.soc_terminal_min is not None and self.soc_terminal_min > self.soc_max:
            problems.append(f"soc_terminal_min {self.soc_terminal_min} exceeds soc_max {self.soc_max}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def soc_grid(self) -> np.ndarray:
        return np.linspace(self.soc_min, self.soc_max, self.soc_levels)


class Home(_Frozen):
    id: int
    node: int
    appliances: Tuple[Appliance, ...] = ()
    battery: Optional[Battery] = None
    # PV is a nonnegative generation magnitude; it is subtracted when net load is assembled.
    pv_kw: Series
    base_load_kw: Series

    @model_validator(mode="after")
    def _series_shapes(self) -> "Home":
        problems = []
        if len(self.pv_kw) != len(self.base_load_kw):
            problems.append(
                f"home {self.id}: pv_kw has {len(self.pv_kw)} slots but base_load_kw has {len(self.base_load_kw)}"
            )
        if any(v < 0 for v in self.base_load_kw):
            problems.append(f"home {self.id}: base_load_kw must be >= 0 everywhere")
        if any(v < 0 for v in self.pv_kw):
            problems.append(f"home {self.id}: pv_kw is a generation magnitude and must be >= 0")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def base_load(self) -> np.ndarray:
        return np.asarray(self.base_load_kw, dtype=float)

    def pv(self) -> np.ndarray:
        return np.asarray(self.pv_kw, dtype=float)

    def fixed_net_load(self) -> np.ndarray:
        """Non-controllable demand minus PV, the part of net load no decision can change."""
        return self.base_load() - self.pv()


class FeederLine(_Frozen):
    from_node: int
    to_node: int
    resistance_pu: float = Field(gt=0)
    reactance_pu: float = Field(ge=0)
    current_limit_pu: float = Field(1.0, gt=0)


def radial_violations(nodes: Tuple[int, ...], slack_node: int, lines: Tuple[FeederLine, ...]) -> List[str]:
    """Returns every reason the line list does not form a tree rooted at the slack node."""
    problems = []
    node_set = set(nodes)
    if len(node_set) != len(nodes):
        problems.append("feeder node ids must be unique")
    if slack_node not in node_set:
        problems.append(f"slack node {slack_node} is not in the node list")
    for i, line in enumerate(lines):
        for end in (line.from_node, line.to_node):
            if end not in node_set:
                problems.append(f"line {i} references unknown node {end}")
    if problems:
        return problems

    graph = nx.MultiGraph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from((line.from_node, line.to_node) for line in lines)
    if not nx.is_connected(graph):
        problems.append("feeder is not connected")
    if graph.number_of_edges() != len(node_set) - 1 or not nx.is_forest(nx.Graph(graph)) or nx.number_of_selfloops(graph):
        problems.append("feeder is not radial (line graph must be a tree)")
    return problems


class FeederTopology(_Frozen):
    nodes: Tuple[int, ...]
    slack_node: int = 0
    lines: Tuple[FeederLine, ...]
    base_mva: float = Field(1.0, gt=0)
    base_kv: float = Field(0.4, gt=0)
    load_power_factor: float = Field(0.95, gt=0, le=1)

    @model_validator(mode="after")
    def _radial(self) -> "FeederTopology":
        problems = radial_violations(self.nodes, self.slack_node, self.lines)
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def current_limits(self) -> np.ndarray:
        return np.array([line.current_limit_pu for line in self.lines], dtype=float)


class TariffParams(_Frozen):
    quad_a: float = Field(0.2, ge=0)
    lin_b: float = 2.0
    const_c: float = 0.0
    profit_coeff: float = Field(4.8, gt=1)
    fit_rate: SeriesOrScalar = 6.0
    rt_buy: SeriesOrScalar = 2.0
    rt_sell: SeriesOrScalar = 2.0
    dg_power: SeriesOrScalar = 0.0
    incentive_w: float = Field(0.5, gt=0, le=1)
    sigma_cap: Optional[float] = Field(5.0, gt=0)
    # baselines below this share of the peak baseline get no incentive
    min_baseline_share: float = Field(0.05, ge=0, lt=1)

    def series(self, name: str, num_slots: int) -> np.ndarray:
        """Broadcasts a scalar-or-series field to a length-T array."""
        value = getattr(self, name)
        if isinstance(value, (int, float)):
            return np.full(num_slots, float(value))
        arr = np.asarray(value, dtype=float)
        if arr.shape != (num_slots,):
            raise ValueError(f"tariff.{name} has {arr.size} slots, expected {num_slots}")
        return arr


class AdmmParams(_Frozen):
    rho_init: float = Field(0.001, gt=0)
    gamma: float = Field(10.0, gt=1)
    tau_incr: float = Field(2.0, gt=1)
    tau_decr: float = Field(2.0, gt=1)
    eps_primal: float = Field(1e-3, gt=0)
    eps_dual: float = Field(1e-3, gt=0)
    alpha: float = Field(1.0, gt=0)
    fairness_eps: float = Field(0.02, ge=0)
    fairness_weight: float = Field(100.0, ge=0)
    max_iters: int = Field(300, ge=1)
    customer_price_feedback: bool = True
    relinearize_tol: float = Field(5e-3, gt=0)
    max_relinearizations: int = Field(3, ge=0)
    dno_max_iters: int = Field(500, ge=1)
    dno_tol: float = Field(1e-9, gt=0)


class Scenario(_Frozen):
    grid: TimeGrid = TimeGrid()
    feeder: FeederTopology
    homes: Tuple[Home, ...] = ()
    tariff: TariffParams = TariffParams()
    admm: AdmmParams = AdmmParams()
    forecast_demand: Optional[Series] = None

    @model_validator(mode="after")
    def _cross_checks(self) -> "Scenario":
        problems = []
        T = self.grid.num_slots
        nodes = set(self.feeder.nodes)
        seen = set()
        for home in self.homes:
            if home.id in seen:
                problems.append(f"duplicate home id {home.id}")
            seen.add(home.id)
            if home.node not in nodes:
                problems.append(f"home {home.id}: node {home.node} is not in the feeder")
            elif home.node == self.feeder.slack_node:
                problems.append(f"home {home.id}: homes cannot sit on the slack node")
            if len(home.base_load_kw) != T:
                problems.append(f"home {home.id}: series have {len(home.base_load_kw)} slots, expected {T}")
            for k, app in enumerate(home.appliances):
                if app.window_end >= T:
                    problems.append(f"home {home.id} appliance {k}: window_end {app.window_end} is past slot {T - 1}")
        if self.forecast_demand is not None and len(self.forecast_demand) != T:
            problems.append(f"forecast_demand has {len(self.forecast_demand)} slots, expected {T}")
        for name in ("fit_rate", "rt_buy", "rt_sell", "dg_power"):
            value = getattr(self.tariff, name)
            if not isinstance(value, (int, float)) and len(value) != T:
                problems.append(f"tariff.{name} has {len(value)} slots, expected {T}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    @property
    def home_ids(self) -> Tuple[int, ...]:
        return tuple(h.id for h in self.homes)

    def home_nodes(self) -> Tuple[int, ...]:
        return tuple(h.node for h in self.homes)
