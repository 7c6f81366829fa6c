from gridsched.loadflow.network import RadialNetwork, build_network
from gridsched.loadflow.sweep import (
    FlowSolution,
    SensitivityMatrix,
    BatchFlow,
    current_sensitivities,
    line_losses_kw,
    linearize_slots,
    solve_batch,
    solve_load_flow,
    solve_slots,
)

__all__ = [
    "RadialNetwork",
    "build_network",
    "FlowSolution",
    "SensitivityMatrix",
    "BatchFlow",
    "current_sensitivities",
    "line_losses_kw",
    "linearize_slots",
    "solve_batch",
    "solve_load_flow",
    "solve_slots",
]
