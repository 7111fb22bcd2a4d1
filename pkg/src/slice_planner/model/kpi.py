"""KPI checking shared by the planner and the brute-force oracle.

``evaluate_deployment`` is the single source of KPI truth: both deployment
producers are validated against it.
"""

import math
from collections import defaultdict
from typing import TYPE_CHECKING, Dict, Iterable, List, Optional, Tuple

from slice_planner.model.scenario import Scenario
from slice_planner.model.types import CPU, Deployment, KpiReport, ServiceRequest

if TYPE_CHECKING:
    from slice_planner.graphs.ledger import ResidualLedger

EPS = 1e-9


def processing_delay(cpu: float, load_term: float) -> float:
    """Mean sojourn time of an M/M/1-PS queue with service rate ``cpu``.

    Args:
        cpu: Assigned CPU in service-rate units.
        load_term: ``r_cpu * load`` for the instance.

    Returns:
        ``1 / (cpu - load_term)`` in ms, or infinity when the queue is unstable.
    """
    slack = cpu - load_term
    if slack <= 0:
        return math.inf
    return 1.0 / slack


def within(value: float, limit: float) -> bool:
    """``value <= limit`` up to a relative tolerance of ``EPS``."""
    if math.isinf(limit):
        return True
    return value <= limit + EPS * max(1.0, abs(limit))


def reliability_product(values: Iterable[float]) -> float:
    return math.prod(values)


def _flows(dep: Deployment) -> Dict[Tuple[str, int], List]:
    flows: Dict[Tuple[str, int], List] = defaultdict(list)
    for placement in dep.placements:
        flows[(placement.endpoint, placement.chain)].append(placement)
    return flows


def evaluate_deployment(
    dep: Deployment,
    req: ServiceRequest,
    scenario: Scenario,
    residual: Optional["ResidualLedger"] = None,
) -> KpiReport:
    """Check a deployment against every KPI of its service.

    Args:
        dep: The deployment to check.
        req: The service the deployment serves.
        scenario: Scenario holding the physical graph and the VNF catalogue.
        residual: Ledger to check capacities against. Full capacities when None.

    Returns:
        A report with per-endpoint delay and reliability and one flag per KPI.

    Raises:
        ValueError: If the deployment is structurally incomplete.
    """
    graph = scenario.graph
    violations: List[str] = []
    flows = _flows(dep)
    routes = {(route.endpoint, route.chain): route for route in dep.routes}
    if set(flows) != set(routes):
        raise ValueError("every placed flow needs exactly one route")

    flow_delay: Dict[str, float] = {}
    endpoint_delay: Dict[str, float] = {}
    elements: Dict[str, set] = defaultdict(set)
    for key, placements in sorted(flows.items()):
        endpoint_id, chain = key
        route = routes[key]
        if len(route.hops) != len(placements):
            raise ValueError(f"flow {endpoint_id}/{chain} has {len(route.hops)} hops for "
                             f"{len(placements)} instances")
        previous = route.origin
        delay = 0.0
        for hop, placement in zip(route.hops, placements):
            if hop.nodes[0] != previous or hop.nodes[-1] != placement.node:
                raise ValueError(f"flow {endpoint_id}/{chain} route does not follow its placement")
            for u, v, link_id in zip(hop.nodes, hop.nodes[1:], hop.links):
                if graph.links[link_id].ends != frozenset((u, v)):
                    raise ValueError(f"link {link_id} does not join {u} and {v}")
                delay += graph.links[link_id].delay
                elements[endpoint_id].add(("link", link_id))
            elements[endpoint_id].update(
                ("node", node) for node in hop.nodes if not graph.is_location(node)
            )
            vnf = scenario.vnfs[placement.vnf]
            delay += processing_delay(placement.cpu, vnf.cpu_per_unit * placement.load)
            previous = placement.node
        flow_delay[f"{endpoint_id}/{chain}"] = delay
        endpoint_delay[endpoint_id] = max(endpoint_delay.get(endpoint_id, 0.0), delay)

    delay_ok = True
    for endpoint_id, delay in endpoint_delay.items():
        if not within(delay, req.delay_target):
            delay_ok = False
            violations.append(f"{endpoint_id}: delay {delay:.6g} ms exceeds {req.delay_target:.6g}")

    reliability: Dict[str, Dict[int, float]] = {}
    reliability_ok = True
    served = {route.endpoint for route in dep.routes}
    for endpoint in req.endpoints:
        endpoint_id = req.endpoint_id(endpoint)
        if endpoint_id not in served:
            continue
        per_step = {}
        for step in scenario.endpoint_steps(endpoint):
            values = []
            for kind, item in elements[endpoint_id]:
                if kind == "link":
                    values.append(graph.links[item].reliability.at(step))
                else:
                    values.append(graph.nodes[item].reliability.at(step))
            per_step[step] = reliability_product(values)
            if per_step[step] < req.reliability_target - 1e-12:
                reliability_ok = False
                violations.append(
                    f"{endpoint_id}: reliability {per_step[step]:.10g} below "
                    f"{req.reliability_target} at step {step}"
                )
        reliability[endpoint_id] = per_step

    availability_ok = True
    for endpoint in req.endpoints:
        endpoint_id = req.endpoint_id(endpoint)
        entry = [route for route in dep.routes
                 if route.endpoint == endpoint_id and route.origin == endpoint.location]
        if not entry:
            availability_ok = False
            violations.append(f"{endpoint_id}: no flow starts at {endpoint.location}")
        for route in entry:
            first = graph.nodes[route.hops[0].nodes[-1]]
            if endpoint.location not in first.coverage:
                availability_ok = False
                violations.append(f"{endpoint_id}: {first.id} does not cover {endpoint.location}")

    interfaces_ok = True
    for placement in dep.placements:
        required = scenario.vnfs[placement.vnf].required_interfaces
        if not required <= graph.nodes[placement.node].interfaces:
            interfaces_ok = False
            violations.append(f"{placement.vnf} on {placement.node} lacks interfaces")

    capacity_ok = True
    for (node, kind), used in sorted(node_usage(dep).items()):
        available = (residual.node_residual(node, kind) if residual is not None
                     else graph.nodes[node].resources.get(kind, 0.0))
        if not within(used, available):
            capacity_ok = False
            violations.append(f"{node}: {kind} {used:.6g} exceeds {available:.6g}")
    for link_id, used in sorted(link_usage(dep).items()):
        available = (residual.link_residual(link_id) if residual is not None
                     else graph.links[link_id].capacity)
        if not within(used, available):
            capacity_ok = False
            violations.append(f"{link_id}: traffic {used:.6g} exceeds {available:.6g}")

    return KpiReport(
        delay=endpoint_delay,
        flow_delay=flow_delay,
        reliability=reliability,
        delay_ok=delay_ok,
        reliability_ok=reliability_ok,
        availability_ok=availability_ok,
        capacity_ok=capacity_ok,
        interfaces_ok=interfaces_ok,
        violations=tuple(violations),
    )


def node_usage(dep: Deployment) -> Dict[Tuple[str, str], float]:
    """Resources a deployment takes from each (node, resource kind)."""
    usage: Dict[Tuple[str, str], float] = defaultdict(float)
    for placement in dep.placements:
        usage[(placement.node, CPU)] += placement.cpu
        for kind, amount in placement.other_resources.items():
            usage[(placement.node, kind)] += amount
    return dict(usage)


def link_usage(dep: Deployment) -> Dict[str, float]:
    """Traffic a deployment carries on each link; repeated traversals add up."""
    usage: Dict[str, float] = defaultdict(float)
    for route in dep.routes:
        for hop in route.hops:
            for link_id in hop.links:
                usage[link_id] += hop.traffic
    return dict(usage)
