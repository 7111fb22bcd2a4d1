"""Domain types for the slice planner.

Physical infrastructure, service requests, planner settings and the deployment
records produced by the planner and the brute-force oracle. Every model is frozen
once validated, so instances can be shared freely between concurrent readers.

Units used throughout: delay in milliseconds, traffic in Mb/s, CPU assignments in
service-rate units (1/ms) so that ``1 / (a - r * load)`` is a delay in ms.
"""

import math
from functools import cached_property
from typing import Dict, FrozenSet, List, Literal, Mapping, Optional, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from slice_planner.utils.config import CONFIG

CPU = "cpu"
ENDPOINT = "endpoint"


class ReliabilityProfile(BaseModel):
    """Probability that a node or link works as intended, per time step.

    A profile is either a constant or a mapping from time step to value; a
    constant next to a mapping acts as the default for unlisted steps.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    constant: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    steps: Dict[int, float] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _accept_scalar(cls, value):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return {"constant": float(value)}
        return value

    @field_validator("steps")
    @classmethod
    def _check_steps(cls, steps: Dict[int, float]) -> Dict[int, float]:
        for step, value in steps.items():
            if not 0.0 < value <= 1.0:
                raise ValueError(f"reliability at step {step} must lie in (0, 1], got {value}")
        return steps

    @model_validator(mode="after")
    def _check_defined(self):
        if self.constant is None and not self.steps:
            raise ValueError("reliability needs a constant or at least one step")
        return self

    def at(self, step: int) -> float:
        """Return the reliability at a time step.

        Raises:
            KeyError: If the profile does not cover the step.
        """
        if step in self.steps:
            return self.steps[step]
        if self.constant is not None:
            return self.constant
        raise KeyError(step)

    def covers(self, steps: Tuple[int, ...]) -> bool:
        return self.constant is not None or all(step in self.steps for step in steps)


ALWAYS_UP = ReliabilityProfile(constant=1.0)

RADIO_TIERS = frozenset({"macro", "micro", "pico", "femto"})


class PhysicalNode(BaseModel):
    """A node of the physical graph: switch, PoA, fog device, MEC, aggregation or cloud."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    resources: Dict[str, float] = Field(default_factory=dict)
    interfaces: FrozenSet[str] = frozenset()
    coverage: FrozenSet[str] = frozenset()
    reliability: ReliabilityProfile = ALWAYS_UP
    resource_unit_cost: Dict[str, float] = Field(default_factory=dict)
    vnf_instantiation_cost: Dict[str, float] = Field(default_factory=dict)
    tier: str = ""

    @field_validator("resources", "resource_unit_cost", "vnf_instantiation_cost")
    @classmethod
    def _non_negative(cls, values: Dict[str, float]) -> Dict[str, float]:
        for key, value in values.items():
            if value < 0:
                raise ValueError(f"{key} must be >= 0, got {value}")
        return values

    @model_validator(mode="after")
    def _check_node(self):
        if self.coverage and not self.interfaces:
            raise ValueError("a node with coverage must declare at least one interface")
        if self.is_compute and self.resource_unit_cost.get(CPU, 0.0) <= 0:
            raise ValueError("a computation-capable node needs a positive cpu unit cost")
        return self

    @property
    def is_compute(self) -> bool:
        return self.resources.get(CPU, 0.0) > 0

    @property
    def is_point_of_access(self) -> bool:
        """Radio cell (macro, micro, pico or femto tier) serving user locations."""
        return self.tier in RADIO_TIERS

    def instantiation_cost(self, vnf: str) -> float:
        return self.vnf_instantiation_cost.get(vnf, 0.0)


class PhysicalLink(BaseModel):
    """An undirected physical link; both directions share one capacity."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    source: str
    target: str
    delay: float = Field(ge=0.0)
    capacity: float = Field(gt=0.0)
    unit_cost: float = Field(default=0.0, ge=0.0)
    reliability: ReliabilityProfile = ALWAYS_UP

    @property
    def ends(self) -> FrozenSet[str]:
        return frozenset((self.source, self.target))


class Vnf(BaseModel):
    """A virtual network function and its per-traffic-unit requirements."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    per_unit_resource: Dict[str, float]
    required_interfaces: FrozenSet[str] = frozenset()

    @field_validator("per_unit_resource")
    @classmethod
    def _needs_cpu(cls, values: Dict[str, float]) -> Dict[str, float]:
        if values.get(CPU, 0.0) <= 0:
            raise ValueError("per_unit_resource.cpu must be > 0")
        if any(value < 0 for value in values.values()):
            raise ValueError("per-unit resource needs must be >= 0")
        return values

    @property
    def cpu_per_unit(self) -> float:
        return self.per_unit_resource[CPU]


class ChiEntry(BaseModel):
    """Traffic scaling coefficient for the triple (prev, cur, next)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    prev: str
    cur: str
    next: str
    value: float = Field(ge=0.0)


class ServiceChain(BaseModel):
    """An ordered VNF chain, with optional scaling coefficients and instance counts."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    vnfs: Tuple[str, ...] = Field(min_length=1)
    chi: Tuple[ChiEntry, ...] = ()
    instance_count: Dict[str, int] = Field(default_factory=dict)
    direction: Literal["uplink", "downlink"] = "uplink"

    @model_validator(mode="before")
    @classmethod
    def _accept_list(cls, value):
        if isinstance(value, (list, tuple)):
            return {"vnfs": tuple(value)}
        return value

    @field_validator("instance_count")
    @classmethod
    def _positive_counts(cls, counts: Dict[str, int]) -> Dict[str, int]:
        for vnf, count in counts.items():
            if count < 1:
                raise ValueError(f"instance_count[{vnf}] must be >= 1")
        return counts

    def count(self, vnf: str) -> int:
        return self.instance_count.get(vnf, 1)

    def chi_value(self, prev: str, cur: str, nxt: str) -> float:
        for entry in self.chi:
            if (entry.prev, entry.cur, entry.next) == (prev, cur, nxt):
                return entry.value
        return 1.0

    def traffic_factors(self) -> Tuple[float, ...]:
        """Fraction of the endpoint load entering each VNF of the chain."""
        factors = [1.0]
        previous = ENDPOINT
        for position in range(1, len(self.vnfs)):
            cur, nxt = self.vnfs[position - 1], self.vnfs[position]
            factors.append(factors[-1] * self.chi_value(previous, cur, nxt))
            previous = cur
        return tuple(factors)

    def instances(self) -> Tuple[Tuple[str, int], ...]:
        """Expand the chain into (vnf, replica) pairs in traversal order."""
        return tuple(
            (vnf, replica) for vnf in self.vnfs for replica in range(self.count(vnf))
        )

    def with_extra_instance(self, vnf: str) -> "ServiceChain":
        counts = dict(self.instance_count)
        counts[vnf] = self.count(vnf) + 1
        return self.model_copy(update={"instance_count": counts})


class Endpoint(BaseModel):
    """A (location, service) pair generating traffic."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    location: str
    load: float = Field(gt=0.0)
    lifetime: Optional[Tuple[int, ...]] = None


class ServiceRequest(BaseModel):
    """A vertical service: VNF graph, endpoints and KPI targets.

    Absent KPIs are non-binding: no ``max_delay`` means an infinite budget and no
    ``min_reliability`` means a target of 0.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    id: str
    chains: Tuple[ServiceChain, ...] = ()
    graph: Tuple[Tuple[str, str], ...] = ()
    endpoints: Tuple[Endpoint, ...] = ()
    max_delay: Optional[float] = Field(default=None, gt=0.0)
    min_reliability: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    isolated: bool = False

    @model_validator(mode="before")
    @classmethod
    def _spread_total_load(cls, data):
        if not isinstance(data, dict) or "total_load" not in data:
            return data
        data = dict(data)
        total = data.pop("total_load")
        endpoints = [dict(endpoint) for endpoint in data.get("endpoints", [])]
        unset = [endpoint for endpoint in endpoints if endpoint.get("load") is None]
        if unset:
            share = float(total) / len(unset)
            for endpoint in unset:
                endpoint["load"] = share
        data["endpoints"] = endpoints
        return data

    @model_validator(mode="after")
    def _check_request(self):
        if not self.chains and not self.graph:
            raise ValueError("a service needs 'chains' or 'graph'")
        locations = [endpoint.location for endpoint in self.endpoints]
        if len(set(locations)) != len(locations):
            raise ValueError("endpoint locations must be unique within a service")
        return self

    @property
    def delay_target(self) -> float:
        return self.max_delay if self.max_delay is not None else math.inf

    @property
    def reliability_target(self) -> float:
        return self.min_reliability if self.min_reliability is not None else 0.0

    @property
    def availability(self) -> FrozenSet[str]:
        return frozenset(endpoint.location for endpoint in self.endpoints)

    def endpoint_id(self, endpoint: Endpoint) -> str:
        return f"{self.id}@{endpoint.location}"

    def endpoint_by_id(self, endpoint_id: str) -> Endpoint:
        for endpoint in self.endpoints:
            if self.endpoint_id(endpoint) == endpoint_id:
                return endpoint
        raise KeyError(endpoint_id)

    def vnf_ids(self) -> Tuple[str, ...]:
        seen: List[str] = []
        for chain in self.chains:
            seen.extend(vnf for vnf in chain.vnfs if vnf not in seen)
        for tail, head in self.graph:
            seen.extend(vnf for vnf in (tail, head) if vnf != ENDPOINT and vnf not in seen)
        return tuple(seen)

    def scaled(self, load_multiplier: float = 1.0, **updates) -> "ServiceRequest":
        """Copy with every endpoint load multiplied and optional field updates."""
        endpoints = tuple(
            endpoint.model_copy(update={"load": endpoint.load * load_multiplier})
            for endpoint in self.endpoints
        )
        return self.model_copy(update={"endpoints": endpoints, **updates})


class CostModel(BaseModel):
    """How link unit costs translate into currency per Mb/s of carried traffic."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    currency: str = "USD"
    transport_unit: Literal["gbit", "mbps"] = "gbit"
    period_seconds: float = Field(default=1.0, gt=0.0)

    def per_mbps(self, unit_cost: float) -> float:
        if self.transport_unit == "mbps":
            return unit_cost
        # Mb/s sustained over the accounting period, expressed in Gbit
        return unit_cost * self.period_seconds / 1000.0


class OracleLimits(BaseModel):
    """Bounds on the brute-force enumeration."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_nodes: int = Field(default_factory=lambda: CONFIG.get_int("ORACLE_MAX_NODES"), ge=1)
    max_chain_len: int = Field(
        default_factory=lambda: CONFIG.get_int("ORACLE_MAX_CHAIN_LEN"), ge=1
    )
    max_strings: int = Field(default_factory=lambda: CONFIG.get_int("ORACLE_MAX_STRINGS"), ge=1)
    max_hops: int = Field(default_factory=lambda: CONFIG.get_int("ORACLE_MAX_HOPS"), ge=1)


class PlannerConfig(BaseModel):
    """Planner settings; defaults come from the process configuration."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: int = Field(default_factory=lambda: CONFIG.get_int("GAMMA"), ge=1)
    k_paths: int = Field(default_factory=lambda: CONFIG.get_int("K_PATHS"), ge=1)
    max_candidates: int = Field(default_factory=lambda: CONFIG.get_int("MAX_CANDIDATES"), ge=1)
    max_instance_replication: int = Field(
        default_factory=lambda: CONFIG.get_int("MAX_INSTANCE_REPLICATION"), ge=0
    )
    time_steps: Tuple[int, ...] = (0,)
    oracle: OracleLimits = Field(default_factory=OracleLimits)

    @field_validator("time_steps")
    @classmethod
    def _non_empty(cls, steps: Tuple[int, ...]) -> Tuple[int, ...]:
        if not steps:
            raise ValueError("time_steps must not be empty")
        if len(set(steps)) != len(steps):
            raise ValueError("time_steps must be unique")
        return steps


class PhysicalGraph(BaseModel):
    """Nodes, links and the locations endpoints live at."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    nodes: Dict[str, PhysicalNode]
    links: Dict[str, PhysicalLink]
    locations: FrozenSet[str] = frozenset()
    time_steps: Tuple[int, ...] = (0,)

    @cached_property
    def topology(self) -> nx.Graph:
        """Undirected routing graph; every edge carries its link id and delay."""
        graph = nx.Graph()
        for node_id, node in self.nodes.items():
            graph.add_node(node_id, kind="node", compute=node.is_compute)
        for location in sorted(self.locations):
            graph.add_node(location, kind="location", compute=False)
        for link in self.links.values():
            graph.add_edge(link.source, link.target, link=link.id, delay=link.delay)
        return graph

    def compute_nodes(self) -> Tuple[str, ...]:
        return tuple(sorted(node_id for node_id, node in self.nodes.items() if node.is_compute))

    def link_between(self, u: str, v: str) -> PhysicalLink:
        return self.links[self.topology.edges[u, v]["link"]]

    def is_location(self, vertex: str) -> bool:
        return vertex in self.locations


class InstancePlacement(BaseModel):
    """One VNF instance serving one endpoint flow, with its resource assignment."""

    model_config = ConfigDict(frozen=True)

    endpoint: str
    chain: int
    vnf: str
    replica: int
    node: str
    load: float
    cpu: float
    other_resources: Dict[str, float] = Field(default_factory=dict)


class RouteHop(BaseModel):
    """The physical realization of one hop of a flow, tail to head."""

    model_config = ConfigDict(frozen=True)

    nodes: Tuple[str, ...]
    links: Tuple[str, ...]
    traffic: float


class FlowRoute(BaseModel):
    """Route of one (endpoint, chain) flow: one hop per placed instance.

    ``origin`` is the endpoint location, or the node of the anchored VNF the chain
    starts from.
    """

    model_config = ConfigDict(frozen=True)

    endpoint: str
    chain: int
    origin: str
    hops: Tuple[RouteHop, ...]


class CostBreakdown(BaseModel):
    """Deployment cost split by component."""

    model_config = ConfigDict(frozen=True)

    instantiation: float = 0.0
    resource: float = 0.0
    transport: float = 0.0

    @property
    def total(self) -> float:
        return self.instantiation + self.resource + self.transport

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(
            instantiation=self.instantiation + other.instantiation,
            resource=self.resource + other.resource,
            transport=self.transport + other.transport,
        )


class Deployment(BaseModel):
    """Placement, resource assignment, routing and cost of one service."""

    model_config = ConfigDict(frozen=True)

    service: str
    placements: Tuple[InstancePlacement, ...] = ()
    routes: Tuple[FlowRoute, ...] = ()
    cost: CostBreakdown = Field(default_factory=CostBreakdown)
    created_instances: Tuple[Tuple[str, str], ...] = ()
    isolated: bool = False

    @property
    def placement(self) -> Dict[Tuple[str, int, str, int], str]:
        """Map (endpoint, chain, vnf, replica) to the hosting node."""
        return {
            (item.endpoint, item.chain, item.vnf, item.replica): item.node
            for item in self.placements
        }

    def hosts(self) -> Tuple[str, ...]:
        return tuple(sorted({item.node for item in self.placements}))

    def points_of_access(self, nodes: Mapping[str, PhysicalNode]) -> Tuple[str, ...]:
        """Radio cells any flow of the deployment crosses or is processed on."""
        poas = {
            node_id
            for route in self.routes
            for hop in route.hops
            for node_id in hop.nodes
            if node_id in nodes and nodes[node_id].is_point_of_access
        }
        return tuple(sorted(poas))

    @classmethod
    def merge(
        cls, service: str, parts: List["Deployment"], isolated: bool = False
    ) -> "Deployment":
        cost = CostBreakdown()
        for part in parts:
            cost = cost + part.cost
        return cls(
            service=service,
            placements=tuple(item for part in parts for item in part.placements),
            routes=tuple(route for part in parts for route in part.routes),
            cost=cost,
            created_instances=tuple(item for part in parts for item in part.created_instances),
            isolated=isolated,
        )


class KpiReport(BaseModel):
    """Outcome of checking a deployment against its service's KPI targets."""

    model_config = ConfigDict(frozen=True)

    delay: Dict[str, float]
    flow_delay: Dict[str, float]
    reliability: Dict[str, Dict[int, float]]
    delay_ok: bool
    reliability_ok: bool
    availability_ok: bool
    capacity_ok: bool
    interfaces_ok: bool
    violations: Tuple[str, ...] = ()

    @property
    def feasible(self) -> bool:
        return (
            self.delay_ok
            and self.reliability_ok
            and self.availability_ok
            and self.capacity_ok
            and self.interfaces_ok
        )
