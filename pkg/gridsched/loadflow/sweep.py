"""
Forward-backward sweep load flow for radial feeders.

Loads are constant-power (P from the schedule, Q = P * tan(acos(pf))). Each sweep
computes node load currents from the present voltages, accumulates them up the tree
(backward) and propagates the voltage drops away from the slack bus (forward).
The sweep runs on a batch of independent operating points at once; a single slot is a
batch of one.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from gridsched.errors import DivergenceError, NotConvergedError
from gridsched.loadflow.network import RadialNetwork, build_network
from gridsched.model.scenario import FeederTopology

logger = logging.getLogger("loadflow")

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100
COLLAPSE_VOLTAGE_PU = 0.5
SENSITIVITY_STEP_PU = 1e-3
SENSITIVITY_TOL = 1e-12
SENSITIVITY_MAX_ITER = 500


@dataclass(frozen=True)
class FlowSolution:
    node_voltage_pu: np.ndarray
    line_current_pu: np.ndarray
    line_loss_kw: np.ndarray
    total_loss_kw: float
    slack_power_kw: float
    converged: bool
    iterations: int
    injections_kw: np.ndarray
    power_factor: float


@dataclass(frozen=True)
class SensitivityMatrix:
    """d|I_f|/dP_n in pu per kW (lines x nodes) and dLoss/dP_n in kW per kW."""
    current: np.ndarray
    loss: np.ndarray


@dataclass(frozen=True)
class BatchFlow:
    """Sweep results for B operating points (rows)."""
    voltage: np.ndarray        # B x N complex
    line_current: np.ndarray   # B x L complex
    converged: np.ndarray      # B bool
    iterations: int


def _complex_power(feeder: FeederTopology, injections_kw: np.ndarray, power_factor: float) -> np.ndarray:
    p = injections_kw / (1000.0 * feeder.base_mva)
    return p + 1j * p * np.tan(np.arccos(power_factor))


def _sweep(net: RadialNetwork, s_pu: np.ndarray, tol: float, max_iter: int) -> BatchFlow:
    voltage = np.ones(s_pu.shape, dtype=complex)
    mismatch = np.zeros(s_pu.shape[0])
    iterations = 0
    for iterations in range(1, max_iter + 1):
        node_current = np.conj(s_pu / voltage)
        line_current = node_current @ net.downstream.T
        new_voltage = 1.0 - (line_current * net.impedance) @ net.downstream
        new_voltage[:, net.slack_index] = 1.0
        mismatch = np.max(np.abs(new_voltage - voltage), axis=1) if voltage.size else mismatch
        voltage = new_voltage
        if np.any(np.abs(voltage) < COLLAPSE_VOLTAGE_PU):
            raise DivergenceError(
                f"voltage collapsed to {np.min(np.abs(voltage)):.3f} pu after {iterations} sweeps"
            )
        if np.all(mismatch < tol):
            break
    line_current = np.conj(s_pu / voltage) @ net.downstream.T
    return BatchFlow(voltage=voltage, line_current=line_current, converged=mismatch < tol, iterations=iterations)


def solve_batch(
    feeder: FeederTopology,
    injections_kw: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    power_factor: Optional[float] = None,
) -> BatchFlow:
    """Solves every row of a B x N node-injection matrix."""
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    net = build_network(feeder)
    pf = feeder.load_power_factor if power_factor is None else power_factor
    inj = np.array(injections_kw, dtype=float, ndmin=2)
    if inj.shape[1] != net.num_nodes:
        raise ValueError(f"expected {net.num_nodes} node injections per row, got shape {inj.shape}")
    inj[:, net.slack_index] = 0.0
    return _sweep(net, _complex_power(feeder, inj, pf), tol, max_iter)


def line_losses_kw(feeder: FeederTopology, line_current: np.ndarray) -> np.ndarray:
    net = build_network(feeder)
    return np.abs(line_current) ** 2 * net.impedance.real * 1000.0 * feeder.base_mva


def solve_load_flow(
    feeder: FeederTopology,
    injections_kw: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    power_factor: Optional[float] = None,
) -> FlowSolution:
    """
    Solves one slot. `injections_kw` holds the net active load per feeder node (positive =
    consumption); the slack entry is ignored.
    """
    net = build_network(feeder)
    pf = feeder.load_power_factor if power_factor is None else power_factor
    inj = np.asarray(injections_kw, dtype=float).copy()
    if inj.shape != (net.num_nodes,):
        raise ValueError(f"expected {net.num_nodes} node injections, got shape {inj.shape}")
    inj[net.slack_index] = 0.0
    flow = solve_batch(feeder, inj[None, :], tol=tol, max_iter=max_iter, power_factor=pf)
    converged = bool(flow.converged[0])
    if not converged:
        logger.warning(f"Load flow did not converge in {max_iter} sweeps; returning partial result")

    line_current = flow.line_current[0]
    loss_kw = line_losses_kw(feeder, line_current)
    root_lines = [f for f, p in enumerate(net.parent) if p == net.slack_index]
    slack_power_kw = float(np.real(np.sum(np.conj(line_current[root_lines])))) * 1000.0 * feeder.base_mva

    return FlowSolution(
        node_voltage_pu=flow.voltage[0],
        line_current_pu=np.abs(line_current),
        line_loss_kw=loss_kw,
        total_loss_kw=float(np.sum(loss_kw)),
        slack_power_kw=slack_power_kw,
        converged=converged,
        iterations=flow.iterations,
        injections_kw=inj,
        power_factor=pf,
    )


def solve_slots(
    feeder: FeederTopology, node_loads_kw: np.ndarray, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> List[FlowSolution]:
    """One load flow per row of a T x N node-load matrix."""
    return [solve_load_flow(feeder, row, tol=tol, max_iter=max_iter) for row in np.atleast_2d(node_loads_kw)]


def linearize_slots(
    feeder: FeederTopology, node_loads_kw: np.ndarray, power_factor: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Operating point and central-difference sensitivities for every slot of a T x N matrix.

    Returns (current T x L, total loss T, d|I|/dP T x L x N, dLoss/dP T x N). Slack columns are 0.
    """
    net = build_network(feeder)
    loads = np.array(node_loads_kw, dtype=float, ndmin=2)
    T, N = loads.shape
    step_kw = SENSITIVITY_STEP_PU * 1000.0 * feeder.base_mva
    nodes = [n for n in range(N) if n != net.slack_index]

    batch = [loads]
    for n in nodes:
        for sign in (1.0, -1.0):
            shifted = loads.copy()
            shifted[:, n] += sign * step_kw
            batch.append(shifted)
    flow = solve_batch(feeder, np.concatenate(batch, axis=0), tol=SENSITIVITY_TOL,
                       max_iter=SENSITIVITY_MAX_ITER, power_factor=power_factor)
    if not np.all(flow.converged):
        raise NotConvergedError("load flow did not converge while linearizing")

    magnitude = np.abs(flow.line_current).reshape(len(batch), T, -1)
    loss = line_losses_kw(feeder, flow.line_current).sum(axis=1).reshape(len(batch), T)
    d_current = np.zeros((T, net.num_lines, N))
    d_loss = np.zeros((T, N))
    for i, n in enumerate(nodes):
        up, down = 1 + 2 * i, 2 + 2 * i
        d_current[:, :, n] = (magnitude[up] - magnitude[down]) / (2 * step_kw)
        d_loss[:, n] = (loss[up] - loss[down]) / (2 * step_kw)
    return magnitude[0], loss[0], d_current, d_loss


def current_sensitivities(feeder: FeederTopology, solution: FlowSolution) -> SensitivityMatrix:
    """
    Linearizes line currents and total losses around a converged operating point by
    central differences of +-1e-3 pu of active power at each node.
    """
    if not solution.converged:
        raise NotConvergedError("cannot linearize around a non-converged load flow")
    _, _, d_current, d_loss = linearize_slots(feeder, solution.injections_kw[None, :], solution.power_factor)
    return SensitivityMatrix(current=d_current[0], loss=d_loss[0])
