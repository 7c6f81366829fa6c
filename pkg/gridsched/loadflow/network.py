"""Tree structure of a radial feeder, in the index space the sweep works in."""

import functools
import logging
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import networkx as nx
import numpy as np

from gridsched.errors import NonRadialError
from gridsched.model.scenario import FeederTopology, radial_violations

logger = logging.getLogger("loadflow")


@dataclass(frozen=True)
class RadialNetwork:
    """
    Feeder oriented away from the slack node.

    `downstream[f, n]` is 1 when node n is fed through line f. Line currents are
    `downstream @ node_currents` and node voltage drops are `downstream.T @ (z * line_currents)`.
    """
    node_ids: Tuple[int, ...]
    slack_index: int
    parent: Tuple[int, ...]        # upstream node index per line
    child: Tuple[int, ...]         # downstream node index per line
    impedance: np.ndarray          # complex, per line
    downstream: np.ndarray         # lines x nodes

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_lines(self) -> int:
        return len(self.parent)

    def index_of(self, node_id: int) -> int:
        return self.node_ids.index(node_id)

    def node_loads(self, home_nodes: Sequence[int], home_loads_kw: np.ndarray) -> np.ndarray:
        """Aggregates an H x T home-load matrix into a T x N node-injection matrix."""
        home_loads_kw = np.atleast_2d(np.asarray(home_loads_kw, dtype=float))
        num_slots = home_loads_kw.shape[1] if home_loads_kw.size else 0
        out = np.zeros((num_slots, self.num_nodes))
        for h, node in enumerate(home_nodes):
            out[:, self.index_of(node)] += home_loads_kw[h]
        return out


@functools.lru_cache(maxsize=64)
def build_network(feeder: FeederTopology) -> RadialNetwork:
    problems = radial_violations(tuple(feeder.nodes), feeder.slack_node, tuple(feeder.lines))
    if problems:
        raise NonRadialError("; ".join(problems))

    index: Dict[int, int] = {node: i for i, node in enumerate(feeder.nodes)}
    graph = nx.Graph()
    graph.add_nodes_from(feeder.nodes)
    for f, line in enumerate(feeder.lines):
        graph.add_edge(line.from_node, line.to_node, line=f)

    depth = nx.single_source_shortest_path_length(graph, feeder.slack_node)
    parent, child = [], []
    for line in feeder.lines:
        a, b = line.from_node, line.to_node
        up, down = (a, b) if depth[a] < depth[b] else (b, a)
        parent.append(index[up])
        child.append(index[down])

    tree = nx.bfs_tree(graph, feeder.slack_node)
    downstream = np.zeros((len(feeder.lines), len(feeder.nodes)))
    for f, c in enumerate(child):
        node = feeder.nodes[c]
        for n in nx.descendants(tree, node) | {node}:
            downstream[f, index[n]] = 1.0

    impedance = np.array([complex(line.resistance_pu, line.reactance_pu) for line in feeder.lines])
    logger.debug(f"Built radial network: {len(feeder.nodes)} nodes, {len(feeder.lines)} lines")
    return RadialNetwork(
        node_ids=tuple(feeder.nodes),
        slack_index=index[feeder.slack_node],
        parent=tuple(parent),
        child=tuple(child),
        impedance=impedance,
        downstream=downstream,
    )
