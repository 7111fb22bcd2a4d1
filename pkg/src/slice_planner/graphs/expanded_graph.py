"""Availability pruning, KPI weights, graph expansion and the layered path search.

The expanded graph replicates every decision vertex once per quantized level of
each binding additive KPI (delay, reliability). An expanded edge moves from depth
``i`` to ``i + steepness`` where steepness is the edge's weight scaled by ``gamma``
and rounded up, so any path that stays within depth ``gamma`` honors the budgets.
The graph is kept implicit: arcs are stored per base vertex and depths are tracked
by the search.
"""

import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

from slice_planner.errors import AvailabilityError
from slice_planner.graphs.decision_graph import (
    DecisionEdge,
    DecisionGraph,
    DecisionVertex,
    KpiWeight,
)
from slice_planner.model.kpi import within
from slice_planner.model.types import PhysicalGraph, ServiceRequest, Vnf
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("graphs.expanded_graph")

DELAY = "delay"
RELIABILITY = "reliability"


def prune_availability(
    dg: DecisionGraph,
    req: ServiceRequest,
    g: PhysicalGraph,
    first_vnf: Optional[Vnf] = None,
    steps: Optional[Iterable[int]] = None,
    endpoints: Optional[Iterable[str]] = None,
) -> DecisionGraph:
    """Drop edges that cannot serve the request's locations or lifetimes.

    An endpoint edge survives only if its head node covers the endpoint's location
    and offers the interfaces ``first_vnf`` needs. Edges whose reliability is zero at
    any of ``steps`` are removed everywhere.

    Args:
        dg: The decision graph.
        req: The service request.
        g: The physical graph.
        first_vnf: VNF the endpoint edges lead into, for the interface check.
        steps: Time steps the edges must be usable at; defaults to all steps.
        endpoints: Endpoint ids to keep. Edges leaving other endpoints are dropped
            and those endpoints are not checked. Defaults to every endpoint.

    Raises:
        AvailabilityError: If a kept endpoint has no adjacent edge left.
    """
    if not req.endpoints:
        return dg
    steps = tuple(steps) if steps is not None else dg.time_steps
    focus = set(endpoints) if endpoints is not None else None
    required = first_vnf.required_interfaces if first_vnf is not None else frozenset()

    kept: List[DecisionEdge] = []
    for edge in dg.edges:
        if any(edge.combined_reliability(step) <= 0.0 for step in steps):
            continue
        if edge.tail.is_endpoint:
            if focus is not None and edge.tail.name not in focus:
                continue
            node = g.nodes[edge.head.name]
            if edge.tail.location not in node.coverage:
                continue
            if not required <= node.interfaces:
                continue
        kept.append(edge)

    served = {edge.tail for edge in kept if edge.tail.is_endpoint}
    starved = [
        vertex.name
        for vertex in dg.vertices
        if vertex.is_endpoint
        and (focus is None or vertex.name in focus)
        and vertex not in served
    ]
    if starved:
        raise AvailabilityError(starved)
    logger.debug(f"Availability pruning kept {len(kept)} of {len(dg.edges)} edges")
    return dg.with_edges(kept)


def assign_weights(
    dg: DecisionGraph,
    max_delay: Optional[float],
    min_reliability: Union[None, float, Mapping[int, float]],
    steps: Optional[Iterable[int]] = None,
) -> DecisionGraph:
    """Attach to every edge the fraction of each KPI budget it consumes.

    The reliability fraction of an edge is its worst share over ``steps``:
    ``max_t log(eta_t) / log(target_t)``. A path whose fractions sum to at most 1
    therefore reaches every step's target.

    Args:
        dg: The (pruned) decision graph.
        max_delay: Delay target in ms, or None when delay is not binding.
        min_reliability: Reliability target in (0, 1), a mapping from time step to
            target when earlier chains leave a different share per step, or None
            when not binding.
        steps: Time steps the weights cover, normally the endpoint's lifetime.
            Defaults to the mapping's steps, or every step of the graph.

    Returns:
        A copy of the graph carrying weights and the targets they were built for.
    """
    if max_delay is not None and not max_delay > 0:
        raise ValueError(f"max_delay must be > 0, got {max_delay}")
    if max_delay is not None and math.isinf(max_delay):
        max_delay = None
    if isinstance(min_reliability, Mapping):
        steps = tuple(steps) if steps is not None else tuple(sorted(min_reliability))
        targets: Optional[Dict[int, float]] = {step: min_reliability[step] for step in steps}
    else:
        steps = tuple(steps) if steps is not None else dg.time_steps
        targets = None if min_reliability is None else {step: min_reliability for step in steps}
    for target in (targets or {}).values():
        if not 0.0 < target < 1.0:
            raise ValueError(f"min_reliability must lie in (0, 1), got {target}")

    weighted: List[DecisionEdge] = []
    for edge in dg.edges:
        if edge.kind == "auxiliary":
            weighted.append(_with_weight(edge, KpiWeight()))
            continue
        delay_frac = edge.delay / max_delay if max_delay is not None else 0.0
        rel_frac = 0.0
        if targets is not None:
            shares = [edge.combined_reliability(step) for step in steps]
            if min(shares) <= 0.0:
                continue
            rel_frac = max(
                0.0,
                *(math.log(share) / math.log(targets[step]) for step, share in zip(steps, shares)),
            )
        weighted.append(_with_weight(edge, KpiWeight(delay_frac, rel_frac)))
    return dg.with_edges(
        weighted,
        max_delay=max_delay,
        min_reliability=max(targets.values()) if targets else None,
        reliability_targets=tuple(sorted(targets.items())) if targets else (),
    )


def _with_weight(edge: DecisionEdge, weight: KpiWeight) -> DecisionEdge:
    return replace(edge, weight=weight)


def steepness(weight: float, gamma: int) -> int:
    """Depth increase for a weight at resolution ``gamma``: ``ceil(gamma * weight)``."""
    return max(0, math.ceil(gamma * weight - 1e-9))


@dataclass(frozen=True)
class ExpandedArc:
    edge: DecisionEdge
    steepness: Tuple[int, ...]


@dataclass(frozen=True)
class ExpandedGraph:
    """Implicit expanded graph: per-vertex arcs plus the depth bound ``gamma``."""

    decision: DecisionGraph
    gamma: int
    demand: float
    dims: Tuple[str, ...]
    arcs: Dict[DecisionVertex, Tuple[ExpandedArc, ...]]

    @property
    def levels(self) -> int:
        return (self.gamma + 1) ** len(self.dims)

    @property
    def vertex_count(self) -> int:
        return len(self.decision.vertices) * self.levels

    @property
    def edge_count(self) -> int:
        total = 0
        for arcs in self.arcs.values():
            for arc in arcs:
                total += math.prod(self.gamma + 1 - s for s in arc.steepness)
        return total


def expand(dg: DecisionGraph, gamma: int, demand: float) -> ExpandedGraph:
    """Quantize the weighted decision graph at resolution ``gamma``.

    Only binding KPIs become depth dimensions. Edges with capacity below ``demand``
    and edges steeper than ``gamma`` in any dimension are left out.
    """
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    dims: Tuple[str, ...] = ()
    if dg.max_delay is not None:
        dims += (DELAY,)
    if dg.min_reliability is not None:
        dims += (RELIABILITY,)

    arcs: Dict[DecisionVertex, List[ExpandedArc]] = defaultdict(list)
    for edge in dg.edges:
        if edge.capacity < demand - 1e-9:
            continue
        weight = edge.weight or KpiWeight()
        steep = []
        for dim in dims:
            steep.append(steepness(weight.delay_frac if dim == DELAY else weight.rel_frac, gamma))
        if any(s > gamma for s in steep):
            continue
        arcs[edge.tail].append(ExpandedArc(edge, tuple(steep)))

    xg = ExpandedGraph(
        decision=dg,
        gamma=gamma,
        demand=demand,
        dims=dims,
        arcs={vertex: tuple(items) for vertex, items in arcs.items()},
    )
    logger.debug(
        f"Expanded graph at gamma={gamma}: {xg.vertex_count} vertices, "
        f"{xg.edge_count} edges, dims={dims}"
    )
    return xg


@dataclass(frozen=True)
class HopRule:
    """Constraints and provisional cost for one layer of the search.

    ``head_cost`` is the cost of hosting the layer's instance on each node at
    ``b = r * load`` (no processing slack); ``transport_rate`` multiplies an edge's
    summed link unit cost.
    """

    allowed_nodes: Optional[FrozenSet[str]] = None
    demand: float = 0.0
    head_cost: Mapping[str, float] = field(default_factory=dict)
    transport_rate: float = 0.0

    def admits(self, node_id: str, capacity: float) -> bool:
        if self.allowed_nodes is not None and node_id not in self.allowed_nodes:
            return False
        return capacity >= self.demand - 1e-9

    def cost(self, edge: DecisionEdge) -> float:
        return self.head_cost.get(edge.head.name, 0.0) + self.transport_rate * edge.unit_cost


@dataclass(frozen=True)
class CandidatePath:
    """A path from a source vertex with one edge per instance to place."""

    source: DecisionVertex
    edges: Tuple[DecisionEdge, ...]
    provisional_cost: float
    steepness: int

    @property
    def placement(self) -> Tuple[str, ...]:
        return tuple(edge.head.name for edge in self.edges)

    @property
    def route(self) -> Tuple[Tuple[Tuple[str, ...], Tuple[str, ...]], ...]:
        return tuple((edge.nodes, edge.links) for edge in self.edges)

    @property
    def network_delay(self) -> float:
        return sum(edge.delay for edge in self.edges)

    def reliability(self, step: int) -> float:
        return math.prod(edge.combined_reliability(step) for edge in self.edges)


_Partial = Tuple[float, int, Tuple[str, ...], Tuple[DecisionEdge, ...]]


def _rank(partial: _Partial):
    cost, steep, nodes, edges = partial
    return (cost, steep, nodes, tuple(edge.index for edge in edges))


def _verified(edges: Sequence[DecisionEdge], dg: DecisionGraph, steps: Tuple[int, ...]) -> bool:
    if dg.max_delay is not None and not within(sum(e.delay for e in edges), dg.max_delay):
        return False
    if dg.min_reliability is not None:
        for step in steps:
            target = dg.reliability_target(step)
            if math.prod(e.combined_reliability(step) for e in edges) < target:
                return False
    return True


def find_candidates(
    xg: ExpandedGraph,
    endpoint: Union[str, DecisionVertex],
    n_edges: int,
    max_candidates: int,
    hop_rules: Optional[Sequence[HopRule]] = None,
    steps: Optional[Iterable[int]] = None,
) -> List[CandidatePath]:
    """Search paths of exactly ``n_edges`` edges from ``endpoint``.

    A hop-layered dynamic program over (vertex, depths) states keeps, per state, the
    ``max_candidates`` best partial paths ranked by provisional cost, then total
    steepness, then node ids. Final paths are de-duplicated by placement and route
    and re-verified against the exact delay and reliability targets at every step.

    Args:
        xg: The expanded graph.
        endpoint: Endpoint id or source vertex (an anchored node for later chains).
        n_edges: Number of instances to place.
        max_candidates: Maximum number of paths kept per state and returned.
        hop_rules: Per-layer node restrictions, demands and costs.
        steps: Time steps to verify reliability at. Defaults to all steps.

    Returns:
        Candidates in ascending provisional cost. Empty when none is feasible.
    """
    dg = xg.decision
    source = endpoint if isinstance(endpoint, DecisionVertex) else dg.endpoint(endpoint)
    if hop_rules is not None and len(hop_rules) != n_edges:
        raise ValueError(f"expected {n_edges} hop rules, got {len(hop_rules)}")
    steps = tuple(steps) if steps is not None else dg.time_steps

    layer: Dict[Tuple[DecisionVertex, Tuple[int, ...]], List[_Partial]] = {
        (source, (0,) * len(xg.dims)): [(0.0, 0, (), ())]
    }
    for position in range(n_edges):
        rule = hop_rules[position] if hop_rules is not None else None
        reached: Dict[Tuple[DecisionVertex, Tuple[int, ...]], List[_Partial]] = defaultdict(list)
        for (vertex, depth), partials in layer.items():
            for arc in xg.arcs.get(vertex, ()):
                edge = arc.edge
                if rule is not None and not rule.admits(edge.head.name, edge.capacity):
                    continue
                new_depth = tuple(d + s for d, s in zip(depth, arc.steepness))
                if any(d > xg.gamma for d in new_depth):
                    continue
                hop_cost = rule.cost(edge) if rule is not None else 0.0
                rise = sum(arc.steepness)
                bucket = reached[(edge.head, new_depth)]
                for cost, steep, nodes, edges in partials:
                    bucket.append((cost + hop_cost, steep + rise, nodes + (edge.head.name,),
                                   edges + (edge,)))
        layer = {
            state: sorted(items, key=_rank)[:max_candidates] for state, items in reached.items()
        }
        logger.debug(f"Layer {position + 1}/{n_edges}: {len(layer)} reachable states")
        if not layer:
            return []

    finals = sorted((p for items in layer.values() for p in items), key=_rank)
    seen = set()
    candidates: List[CandidatePath] = []
    for cost, steep, nodes, edges in finals:
        key = (nodes, tuple((edge.nodes, edge.links) for edge in edges))
        if key in seen:
            continue
        seen.add(key)
        if not _verified(edges, dg, steps):
            logger.warning(f"Discarding candidate {nodes}: exact KPI check failed")
            continue
        candidates.append(CandidatePath(source, edges, cost, steep))
        if len(candidates) >= max_candidates:
            break
    return candidates
