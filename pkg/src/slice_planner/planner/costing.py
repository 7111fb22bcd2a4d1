"""Exact pricing of one chain placement, shared by the planner and the oracle.

Given the host and physical route of every instance, pricing sizes non-CPU
resources at exact equality, runs the CPU assignment and totals instantiation,
resource and transport cost. The provisional cost (every CPU at ``b = r * load``)
is a lower bound of the exact cost and is what the layered search ranks by.
"""

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from slice_planner.graphs.expanded_graph import HopRule
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.kpi import EPS
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import (
    CPU,
    CostBreakdown,
    Deployment,
    Endpoint,
    FlowRoute,
    InstancePlacement,
    RouteHop,
    ServiceChain,
    ServiceRequest,
)
from slice_planner.optimisation.cpu_assign import (
    CAPACITY,
    CpuProblem,
    CpuSolution,
    Infeasible,
    best_processing_times,
    bottleneck_vnf,
    solve,
)
from slice_planner.planner.decompose import ChainTask
from slice_planner.utils.config import CONFIG

LINK_CAPACITY = "link-capacity"
RESOURCE_CAPACITY = "resource-capacity"


@dataclass(frozen=True)
class InstanceSlot:
    """One VNF instance of a chain still to be placed.

    ``load`` is the traffic the instance processes; ``hop_traffic`` the traffic on
    the hop into it (the full VNF input, also for replicated VNFs).
    """

    vnf: str
    replica: int
    load: float
    hop_traffic: float
    pinned: Optional[str] = None


@dataclass(frozen=True)
class Hop:
    """Host of one instance plus the physical path leading to it."""

    node: str
    nodes: Tuple[str, ...]
    links: Tuple[str, ...]


@dataclass(frozen=True)
class PricedPlacement:
    deployment: Deployment
    provisional_cost: float
    solution: CpuSolution
    network_delay: float

    @property
    def cost(self) -> float:
        return self.deployment.cost.total


@dataclass(frozen=True)
class PricingFailure:
    """Why a candidate could not be priced.

    CPU failures name the bottleneck VNF and its processing time at full cap.
    """

    reason: str
    provisional_cost: float
    bottleneck: Optional[str] = None
    bottleneck_time: float = 0.0


def _cpu_failure(reason: str, provisional: float, problem: CpuProblem) -> PricingFailure:
    if reason != CAPACITY:
        return PricingFailure(reason, provisional)
    slowest = max(best_processing_times(problem), default=0.0)
    return PricingFailure(reason, provisional, bottleneck_vnf(problem), slowest)


def delay_budget(req: ServiceRequest) -> float:
    if req.max_delay is not None:
        return req.max_delay
    return CONFIG.get_float("UNBOUNDED_DELAY_BUDGET_MS")


def chain_slots(
    task: ChainTask, chain: ServiceChain, load: float, anchor_nodes: Mapping[str, str]
) -> Tuple[InstanceSlot, ...]:
    """Instances of ``chain`` to place, skipping the anchored VNFs it starts from."""
    factors = chain.traffic_factors()
    slots: List[InstanceSlot] = []
    for position, vnf in enumerate(chain.vnfs):
        if position < task.leading_anchor:
            continue
        flow = load * factors[position]
        count = chain.count(vnf)
        pinned = anchor_nodes.get(vnf) if vnf in task.anchors else None
        for replica in range(count):
            slots.append(InstanceSlot(vnf, replica, flow / count, flow, pinned))
    return tuple(slots)


def allowed_hosts(scenario: Scenario, slot: InstanceSlot) -> FrozenSet[str]:
    """Compute nodes offering the interfaces the slot's VNF needs."""
    if slot.pinned is not None:
        return frozenset((slot.pinned,))
    required = scenario.vnfs[slot.vnf].required_interfaces
    graph = scenario.graph
    return frozenset(
        node_id for node_id in graph.compute_nodes() if required <= graph.nodes[node_id].interfaces
    )


def _other_resources(scenario: Scenario, slot: InstanceSlot) -> Dict[str, float]:
    needs = scenario.vnfs[slot.vnf].per_unit_resource
    return {kind: per_unit * slot.load for kind, per_unit in needs.items() if kind != CPU}


def _instantiation(
    scenario: Scenario, req: ServiceRequest, ledger: ResidualLedger, vnf: str, node_id: str
) -> float:
    if ledger.can_reuse(vnf, node_id, req.id, req.isolated):
        return 0.0
    return scenario.graph.nodes[node_id].instantiation_cost(vnf)


def hosting_cost(
    scenario: Scenario,
    req: ServiceRequest,
    ledger: ResidualLedger,
    slot: InstanceSlot,
    node_id: str,
) -> float:
    """Cost of hosting a slot on a node with CPU at exactly ``b``."""
    node = scenario.graph.nodes[node_id]
    vnf = scenario.vnfs[slot.vnf]
    cost = _instantiation(scenario, req, ledger, slot.vnf, node_id)
    cost += node.resource_unit_cost.get(CPU, 0.0) * vnf.cpu_per_unit * slot.load
    for kind, amount in _other_resources(scenario, slot).items():
        cost += node.resource_unit_cost.get(kind, 0.0) * amount
    return cost


def hop_rules(
    scenario: Scenario,
    req: ServiceRequest,
    ledger: ResidualLedger,
    slots: Sequence[InstanceSlot],
    relaxed: bool = False,
) -> Tuple[HopRule, ...]:
    """Per-layer search rules: admissible hosts, link demand and provisional costs."""
    per_mbps = scenario.costs.per_mbps(1.0)
    rules = []
    for slot in slots:
        hosts = allowed_hosts(scenario, slot)
        rules.append(
            HopRule(
                allowed_nodes=hosts,
                demand=0.0 if relaxed else slot.hop_traffic,
                head_cost={node: hosting_cost(scenario, req, ledger, slot, node) for node in hosts},
                transport_rate=per_mbps * slot.hop_traffic,
            )
        )
    return tuple(rules)


def price_placement(
    scenario: Scenario,
    req: ServiceRequest,
    ledger: ResidualLedger,
    endpoint: Endpoint,
    chain_index: int,
    origin: str,
    slots: Sequence[InstanceSlot],
    hops: Sequence[Hop],
    max_delay: Optional[float] = None,
) -> Union[PricedPlacement, PricingFailure]:
    """Price one placement of a chain exactly.

    Args:
        scenario: The scenario.
        req: The service being placed.
        ledger: Residuals and deployed instances the placement is sized against.
        endpoint: The endpoint whose flow this chain carries.
        chain_index: Index of the chain task.
        origin: Location or anchored node the route starts from.
        slots: The instances to place, in chain order.
        hops: Host and path of each instance, in chain order.
        max_delay: Delay target. Defaults to the service's budget.

    Returns:
        The priced deployment part, or the reason the placement is infeasible.
    """
    if len(slots) != len(hops):
        raise ValueError("every slot needs a hop")
    graph = scenario.graph
    max_delay = delay_budget(req) if max_delay is None else max_delay
    per_mbps = scenario.costs.per_mbps(1.0)

    transport = 0.0
    network_delay = 0.0
    link_use: Dict[str, float] = defaultdict(float)
    for slot, hop in zip(slots, hops):
        for link_id in hop.links:
            link = graph.links[link_id]
            link_use[link_id] += slot.hop_traffic
            network_delay += link.delay
            transport += per_mbps * link.unit_cost * slot.hop_traffic

    instantiation = 0.0
    other_cost = 0.0
    created: List[Tuple[str, str]] = []
    others: List[Dict[str, float]] = []
    other_use: Dict[Tuple[str, str], float] = defaultdict(float)
    loads: List[float] = []
    for slot, hop in zip(slots, hops):
        node = graph.nodes[hop.node]
        if not ledger.can_reuse(slot.vnf, hop.node, req.id, req.isolated):
            created.append((slot.vnf, hop.node))
            instantiation += node.instantiation_cost(slot.vnf)
        resources = _other_resources(scenario, slot)
        others.append(resources)
        for kind, amount in resources.items():
            other_use[(hop.node, kind)] += amount
            other_cost += node.resource_unit_cost.get(kind, 0.0) * amount
        loads.append(scenario.vnfs[slot.vnf].cpu_per_unit * slot.load)

    unit_costs = [graph.nodes[hop.node].resource_unit_cost[CPU] for hop in hops]
    provisional = (
        instantiation + other_cost + transport + sum(c * b for c, b in zip(unit_costs, loads))
    )

    for link_id, used in link_use.items():
        if used > ledger.link_residual(link_id) + EPS:
            return PricingFailure(LINK_CAPACITY, provisional)
    for (node_id, kind), used in other_use.items():
        if used > ledger.node_residual(node_id, kind) + EPS:
            return PricingFailure(RESOURCE_CAPACITY, provisional)

    per_node_load: Dict[str, float] = defaultdict(float)
    for hop, b in zip(hops, loads):
        per_node_load[hop.node] += b
    caps = [
        ledger.node_residual(hop.node, CPU) - (per_node_load[hop.node] - b)
        for hop, b in zip(hops, loads)
    ]
    problem = CpuProblem(
        unit_costs=tuple(unit_costs),
        loads=tuple(loads),
        caps=tuple(caps),
        network_delay=network_delay,
        max_delay=max_delay,
        vnfs=tuple(slot.vnf for slot in slots),
    )
    solution = solve(problem)
    if isinstance(solution, Infeasible):
        return _cpu_failure(solution.reason, provisional, problem)

    per_node_cpu: Dict[str, float] = defaultdict(float)
    for hop, a in zip(hops, solution.assignment):
        per_node_cpu[hop.node] += a
    for node_id, used in per_node_cpu.items():
        if used > ledger.node_residual(node_id, CPU) + EPS:
            return _cpu_failure(CAPACITY, provisional, problem)

    endpoint_id = req.endpoint_id(endpoint)
    placements = tuple(
        InstancePlacement(
            endpoint=endpoint_id,
            chain=chain_index,
            vnf=slot.vnf,
            replica=slot.replica,
            node=hop.node,
            load=slot.load,
            cpu=a,
            other_resources=resources,
        )
        for slot, hop, a, resources in zip(slots, hops, solution.assignment, others)
    )
    route = FlowRoute(
        endpoint=endpoint_id,
        chain=chain_index,
        origin=origin,
        hops=tuple(
            RouteHop(nodes=hop.nodes, links=hop.links, traffic=slot.hop_traffic)
            for slot, hop in zip(slots, hops)
        ),
    )
    resource = other_cost + sum(c * a for c, a in zip(unit_costs, solution.assignment))
    deployment = Deployment(
        service=req.id,
        placements=placements,
        routes=(route,),
        cost=CostBreakdown(instantiation=instantiation, resource=resource, transport=transport),
        created_instances=tuple(created),
        isolated=req.isolated,
    )
    return PricedPlacement(deployment, provisional, solution, network_delay)
