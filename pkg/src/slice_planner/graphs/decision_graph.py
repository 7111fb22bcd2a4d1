"""Decision graph construction.

The decision graph has one vertex per endpoint of a request and ``n_copies``
vertices per computation-capable node (replica 0 is the node itself, replicas let
consecutive VNFs share a node without self-loops). Auxiliary edges chain a node to
its next replica; virtual edges stand for physical paths and carry the aggregated
capacity, delay and per-step reliability of the path, read from the residual ledger.
"""

import math
from dataclasses import dataclass, field, replace
from itertools import islice
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import networkx as nx

from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.types import PhysicalGraph, ServiceRequest
from slice_planner.utils.config import CONFIG
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("graphs.decision_graph")

Steps = Tuple[Tuple[int, float], ...]


@dataclass(frozen=True, order=True)
class DecisionVertex:
    """An endpoint or a replica of a computation-capable node."""

    kind: Literal["compute", "endpoint"]
    name: str
    replica: int = 0
    location: str = ""

    @property
    def is_endpoint(self) -> bool:
        return self.kind == "endpoint"

    def __str__(self) -> str:
        if self.is_endpoint:
            return self.name
        return f"{self.name}#{self.replica}"


@dataclass(frozen=True)
class KpiWeight:
    """Fractions of the delay and reliability budgets an edge consumes."""

    delay_frac: float = 0.0
    rel_frac: float = 0.0


@dataclass(frozen=True)
class DecisionEdge:
    """A directed decision-graph edge.

    ``reliability`` folds the links and intermediate nodes of the realization;
    ``hosting_reliability`` is the head node's own reliability when the edge enters
    a real node (replica 0), and 1 otherwise.
    """

    index: int
    tail: DecisionVertex
    head: DecisionVertex
    kind: Literal["auxiliary", "virtual"]
    capacity: float
    delay: float
    reliability: Steps
    hosting_reliability: Steps
    nodes: Tuple[str, ...]
    links: Tuple[str, ...]
    unit_cost: float = 0.0
    weight: Optional[KpiWeight] = None

    def reliability_at(self, step: int) -> float:
        return dict(self.reliability)[step]

    def combined_reliability(self, step: int) -> float:
        return dict(self.reliability)[step] * dict(self.hosting_reliability)[step]


@dataclass(frozen=True)
class DecisionGraph:
    """Vertices, edges and the KPI targets the weights were computed for."""

    vertices: Tuple[DecisionVertex, ...]
    edges: Tuple[DecisionEdge, ...]
    time_steps: Tuple[int, ...]
    n_copies: int
    max_delay: Optional[float] = None
    min_reliability: Optional[float] = None
    reliability_targets: Steps = ()
    _out: Dict[DecisionVertex, Tuple[DecisionEdge, ...]] = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        out: Dict[DecisionVertex, List[DecisionEdge]] = {vertex: [] for vertex in self.vertices}
        for edge in self.edges:
            out[edge.tail].append(edge)
        object.__setattr__(self, "_out", {vertex: tuple(items) for vertex, items in out.items()})

    def reliability_target(self, step: int) -> Optional[float]:
        """Reliability the path must reach at ``step``; the strictest target if unset."""
        return dict(self.reliability_targets).get(step, self.min_reliability)

    def out_edges(self, vertex: DecisionVertex) -> Tuple[DecisionEdge, ...]:
        return self._out.get(vertex, ())

    def endpoint(self, name: str) -> DecisionVertex:
        for vertex in self.vertices:
            if vertex.is_endpoint and vertex.name == name:
                return vertex
        raise KeyError(name)

    def compute(self, node_id: str, replica: int = 0) -> DecisionVertex:
        vertex = DecisionVertex("compute", node_id, replica)
        if vertex not in self._out:
            raise KeyError(str(vertex))
        return vertex

    def with_edges(self, edges: Sequence[DecisionEdge], **updates) -> "DecisionGraph":
        return replace(self, edges=tuple(edges), **updates)

    def to_networkx(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph()
        for vertex in self.vertices:
            graph.add_node(str(vertex), kind=vertex.kind, node=vertex.name, replica=vertex.replica)
        for edge in self.edges:
            attributes = {
                "kind": edge.kind,
                "capacity": edge.capacity,
                "delay": edge.delay,
                "reliability": ";".join(f"{t}:{value:.12g}" for t, value in edge.reliability),
                "hosting_reliability": ";".join(
                    f"{t}:{value:.12g}" for t, value in edge.hosting_reliability
                ),
                "links": ";".join(edge.links),
                "path": ";".join(edge.nodes),
            }
            if edge.weight is not None:
                attributes["delay_frac"] = edge.weight.delay_frac
                attributes["rel_frac"] = edge.weight.rel_frac
            graph.add_edge(str(edge.tail), str(edge.head), key=edge.index, **attributes)
        return graph

    def write_graphml(self, path: Union[str, Path]) -> None:
        """Export vertices and edges with their attributes as GraphML."""
        nx.write_graphml(self.to_networkx(), str(path))
        logger.info(f"Wrote decision graph ({len(self.vertices)} vertices) to {path}")


class _Realizations:
    """K minimum-delay physical paths between vertex pairs, cached per build."""

    def __init__(self, graph: PhysicalGraph, k_paths: int):
        self.graph = graph
        self.k_paths = k_paths
        topology = graph.topology
        compute = set(graph.compute_nodes())
        self._routing_only = [
            node for node in topology.nodes if node in graph.nodes and node not in compute
        ]
        self._core = topology.subgraph(list(graph.nodes))
        self._cache: Dict[Tuple[str, str], List[List[str]]] = {}

    def between(self, source: str, target: str, from_location: bool) -> List[List[str]]:
        key = (source, target)
        if key not in self._cache:
            if from_location:
                allowed = [source, target, *self._routing_only]
                view = self.graph.topology.subgraph(allowed)
            else:
                view = self._core
            self._cache[key] = _k_shortest(view, source, target, self.k_paths)
        return self._cache[key]


def _k_shortest(view: nx.Graph, source: str, target: str, k: int) -> List[List[str]]:
    if source not in view or target not in view:
        return []
    try:
        return list(islice(nx.shortest_simple_paths(view, source, target, weight="delay"), k))
    except nx.NetworkXNoPath:
        return []


def _fold_path(
    graph: PhysicalGraph, ledger: ResidualLedger, path: List[str], steps: Tuple[int, ...]
) -> Tuple[float, float, Steps, Tuple[str, ...], float]:
    links = tuple(graph.link_between(u, v).id for u, v in zip(path, path[1:]))
    capacity = min(ledger.link_residual(link_id) for link_id in links)
    delay = sum(graph.links[link_id].delay for link_id in links)
    unit_cost = sum(graph.links[link_id].unit_cost for link_id in links)
    reliability = []
    for step in steps:
        value = math.prod(graph.links[link_id].reliability.at(step) for link_id in links)
        value *= math.prod(graph.nodes[node].reliability.at(step) for node in path[1:-1])
        reliability.append((step, value))
    return capacity, delay, tuple(reliability), links, unit_cost


def build_decision_graph(
    g: PhysicalGraph,
    ledger: ResidualLedger,
    req: ServiceRequest,
    n_copies: Optional[int] = None,
    k_paths: Optional[int] = None,
) -> DecisionGraph:
    """Build the decision graph of a request over the current residuals.

    Args:
        g: The physical graph.
        ledger: Residual capacities edges are sized from.
        req: The service request; its endpoints become vertices.
        n_copies: Vertices per compute node. Defaults to the longest chain of the
            request, counted in instances.
        k_paths: Realizations kept per vertex pair. Defaults to the configured value.

    Returns:
        The decision graph. An unreachable graph is a valid result.
    """
    if n_copies is None:
        n_copies = max((len(chain.instances()) for chain in req.chains), default=1)
    n_copies = max(1, n_copies)
    k_paths = k_paths or CONFIG.get_int("K_PATHS")
    steps = g.time_steps
    ones: Steps = tuple((step, 1.0) for step in steps)

    endpoints = [
        DecisionVertex("endpoint", req.endpoint_id(endpoint), 0, endpoint.location)
        for endpoint in req.endpoints
    ]
    compute_ids = g.compute_nodes()
    replicas = {
        node_id: [DecisionVertex("compute", node_id, r) for r in range(n_copies)]
        for node_id in compute_ids
    }
    hosting = {
        node_id: tuple((step, g.nodes[node_id].reliability.at(step)) for step in steps)
        for node_id in compute_ids
    }

    edges: List[DecisionEdge] = []

    def add(tail, head, kind, capacity, delay, reliability, nodes, links, unit_cost=0.0):
        entering_real = head.kind == "compute" and head.replica == 0
        edges.append(
            DecisionEdge(
                index=len(edges),
                tail=tail,
                head=head,
                kind=kind,
                capacity=capacity,
                delay=delay,
                reliability=reliability,
                hosting_reliability=hosting[head.name] if entering_real else ones,
                nodes=nodes,
                links=links,
                unit_cost=unit_cost,
            )
        )

    realizations = _Realizations(g, k_paths)

    for vertex in endpoints:
        for node_id in compute_ids:
            for path in realizations.between(vertex.location, node_id, from_location=True):
                capacity, delay, reliability, links, cost = _fold_path(g, ledger, path, steps)
                add(vertex, replicas[node_id][0], "virtual", capacity, delay, reliability,
                    tuple(path), links, cost)

    for node_id in compute_ids:
        for r in range(n_copies - 1):
            add(replicas[node_id][r], replicas[node_id][r + 1], "auxiliary", math.inf, 0.0,
                ones, (node_id,), ())
        for other in compute_ids:
            if other == node_id:
                continue
            for path in realizations.between(node_id, other, from_location=False):
                capacity, delay, reliability, links, cost = _fold_path(g, ledger, path, steps)
                for r in range(n_copies):
                    add(replicas[node_id][r], replicas[other][0], "virtual", capacity, delay,
                        reliability, tuple(path), links, cost)

    vertices = tuple(endpoints) + tuple(v for node_id in compute_ids for v in replicas[node_id])
    logger.debug(
        f"Decision graph for {req.id}: {len(vertices)} vertices, {len(edges)} edges "
        f"({n_copies} copies per compute node)"
    )
    return DecisionGraph(vertices=vertices, edges=tuple(edges), time_steps=steps, n_copies=n_copies)
