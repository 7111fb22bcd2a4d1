"""Decomposition of service graphs into chains placed one after another."""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import networkx as nx

from slice_planner.model.types import ENDPOINT, ServiceChain, ServiceRequest


@dataclass(frozen=True)
class ChainTask:
    """One chain to place, with the VNFs earlier chains already pinned."""

    index: int
    chain: ServiceChain
    anchors: Tuple[str, ...] = ()

    @property
    def leading_anchor(self) -> int:
        """Number of leading VNFs that are anchored; the search starts after them."""
        count = 0
        for vnf in self.chain.vnfs:
            if vnf not in self.anchors:
                break
            count += 1
        return count


def _graph_chains(edges: Sequence[Tuple[str, str]]) -> List[ServiceChain]:
    dag = nx.DiGraph(list(edges))
    reachable = nx.descendants(dag, ENDPOINT)

    uplink: List[ServiceChain] = []
    sinks = [node for node in dag.nodes if node in reachable and dag.out_degree(node) == 0]
    for sink in sinks:
        for path in nx.all_simple_paths(dag, ENDPOINT, sink):
            uplink.append(ServiceChain(vnfs=tuple(path[1:]), direction="uplink"))
    on_uplink = {vnf for chain in uplink for vnf in chain.vnfs}

    downlink: List[ServiceChain] = []
    sources = [
        node for node in dag.nodes
        if node != ENDPOINT and node not in reachable and dag.in_degree(node) == 0
    ]
    for source in sources:
        paths = nx.single_source_shortest_path(dag, source)
        hits = [target for target in paths if target in on_uplink]
        if not hits:
            continue
        nearest = min(hits, key=lambda target: len(paths[target]))
        downlink.append(
            ServiceChain(vnfs=tuple(reversed(paths[nearest])), direction="downlink")
        )
    return uplink + downlink


def decompose(req: ServiceRequest) -> List[ChainTask]:
    """Order a request's chains and mark the VNFs each one finds already placed.

    A service ``graph`` is split into uplink chains (maximal paths from the
    endpoint) followed by downlink chains, each running from the nearest VNF shared
    with an uplink chain back to a source the endpoint does not feed. Declared
    ``chains`` are used as they are.

    Args:
        req: The service request.

    Returns:
        Chain tasks in placement order.
    """
    chains = _graph_chains(req.graph) if req.graph else list(req.chains)
    placed = set()
    tasks: List[ChainTask] = []
    for index, chain in enumerate(chains):
        anchors = tuple(vnf for vnf in chain.vnfs if vnf in placed)
        tasks.append(ChainTask(index, chain, anchors))
        placed.update(chain.vnfs)
    return tasks
