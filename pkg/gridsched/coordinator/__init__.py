from gridsched.coordinator.admm import (
    CoordinationState,
    IterationRecord,
    adapt_rho,
    dual_update,
    rescale_duals,
    residuals,
)
from gridsched.coordinator.result import MODES, DnoCosts, NetworkSeries, RunResult, Trace
from gridsched.coordinator.runs import run_coordinated, run_uncoordinated
from gridsched.coordinator.oracle import centralized_oracle, joint_objective
from gridsched.coordinator.engine import Coordinator

__all__ = [
    "CoordinationState",
    "IterationRecord",
    "adapt_rho",
    "dual_update",
    "rescale_duals",
    "residuals",
    "MODES",
    "DnoCosts",
    "NetworkSeries",
    "RunResult",
    "Trace",
    "run_coordinated",
    "run_uncoordinated",
    "centralized_oracle",
    "joint_objective",
    "Coordinator",
]
