"""Scenario loading for the slice planner.

A scenario is one YAML document with the sections ``nodes``, ``links``, ``vnfs``,
``services``, ``costs`` and ``config`` (plus optional ``name``, ``description`` and
``locations``). The schema is documented in ``scenarios/SCENARIOS.md``.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import networkx as nx
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from slice_planner.errors import ScenarioError
from slice_planner.model.types import (
    ENDPOINT,
    CostModel,
    Endpoint,
    PhysicalGraph,
    PhysicalLink,
    PhysicalNode,
    PlannerConfig,
    ServiceRequest,
    Vnf,
)
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("model.scenario")


class ScenarioDocument(BaseModel):
    """The raw document shape; unknown keys are rejected at every level."""

    model_config = ConfigDict(extra="forbid")

    name: str = ""
    description: str = ""
    locations: Tuple[str, ...] = ()
    nodes: Tuple[PhysicalNode, ...] = Field(min_length=1)
    links: Tuple[PhysicalLink, ...] = ()
    vnfs: Tuple[Vnf, ...] = Field(min_length=1)
    services: Tuple[ServiceRequest, ...] = ()
    costs: CostModel = Field(default_factory=CostModel)
    config: PlannerConfig = Field(default_factory=PlannerConfig)


class Scenario(BaseModel):
    """A validated scenario: physical graph, VNF catalogue, services and settings."""

    model_config = ConfigDict(frozen=True)

    name: str
    graph: PhysicalGraph
    vnfs: Dict[str, Vnf]
    services: Tuple[ServiceRequest, ...]
    config: PlannerConfig
    costs: CostModel

    def service(self, service_id: str) -> ServiceRequest:
        for service in self.services:
            if service.id == service_id:
                return service
        raise KeyError(service_id)

    def endpoint_steps(self, endpoint: Endpoint) -> Tuple[int, ...]:
        """Time steps an endpoint is active in; all steps when no lifetime is set."""
        return endpoint.lifetime if endpoint.lifetime is not None else self.graph.time_steps

    def request_steps(self, request: ServiceRequest) -> Tuple[int, ...]:
        steps = set()
        for endpoint in request.endpoints:
            steps.update(self.endpoint_steps(endpoint))
        return tuple(sorted(steps)) or self.graph.time_steps

    def with_config(self, **updates: Any) -> "Scenario":
        return self.model_copy(update={"config": self.config.model_copy(update=updates)})

    def with_services(self, services: Iterable[ServiceRequest]) -> "Scenario":
        return self.model_copy(update={"services": tuple(services)})


def _format_location(loc: Tuple[Union[str, int], ...]) -> str:
    parts = []
    for item in loc:
        if isinstance(item, int):
            parts.append(f"[{item}]")
        else:
            parts.append(f".{item}" if parts else str(item))
    return "".join(parts)


def _check_unique(ids: Iterable[str], section: str, path: Optional[str]) -> None:
    seen = set()
    for index, item in enumerate(ids):
        if item in seen:
            raise ScenarioError(f"duplicate id {item!r}", f"{section}[{index}].id", path)
        seen.add(item)


def _check_graph(doc: ScenarioDocument, path: Optional[str]) -> Tuple[str, ...]:
    node_ids = {node.id for node in doc.nodes}
    locations = set(doc.locations)
    for node in doc.nodes:
        locations.update(node.coverage)
    clash = node_ids & locations
    if clash:
        raise ScenarioError(
            f"ids used both as node and location: {sorted(clash)}", "locations", path
        )

    steps = doc.config.time_steps
    for index, node in enumerate(doc.nodes):
        if not node.reliability.covers(steps):
            raise ScenarioError(
                "reliability is not defined for every time step",
                f"nodes[{index}].reliability",
                path,
            )

    pairs = set()
    for index, link in enumerate(doc.links):
        where = f"links[{index}]"
        for end in (link.source, link.target):
            if end not in node_ids and end not in locations:
                raise ScenarioError(f"unknown node or location {end!r}", where, path)
        if link.source == link.target:
            raise ScenarioError("a link must join two different vertices", where, path)
        if link.source in locations and link.target in locations:
            raise ScenarioError("a link cannot join two locations", where, path)
        if link.ends in pairs:
            raise ScenarioError("parallel links between the same vertices", where, path)
        pairs.add(link.ends)
        if not link.reliability.covers(steps):
            raise ScenarioError(
                "reliability is not defined for every time step", f"{where}.reliability", path
            )
    return tuple(sorted(locations))


def _check_services(doc: ScenarioDocument, locations: Tuple[str, ...], path: Optional[str]) -> None:
    vnf_ids = {vnf.id for vnf in doc.vnfs}
    steps = set(doc.config.time_steps)
    for index, service in enumerate(doc.services):
        where = f"services[{index}]"
        if not service.endpoints:
            raise ScenarioError("a service needs at least one endpoint", f"{where}.endpoints", path)
        for position, chain in enumerate(service.chains):
            for vnf in chain.vnfs:
                if vnf not in vnf_ids:
                    raise ScenarioError(f"unknown vnf {vnf!r}", f"{where}.chains[{position}]", path)
        if service.graph:
            dag = nx.DiGraph(service.graph)
            for vnf in dag.nodes:
                if vnf != ENDPOINT and vnf not in vnf_ids:
                    raise ScenarioError(f"unknown vnf {vnf!r}", f"{where}.graph", path)
            if not nx.is_directed_acyclic_graph(dag):
                raise ScenarioError("service graph has a cycle", f"{where}.graph", path)
            if ENDPOINT not in dag or dag.in_degree(ENDPOINT) > 0:
                raise ScenarioError(
                    f"service graph must start at the reserved vertex {ENDPOINT!r}",
                    f"{where}.graph",
                    path,
                )
        for position, endpoint in enumerate(service.endpoints):
            if endpoint.location not in locations:
                raise ScenarioError(
                    f"unknown location {endpoint.location!r}",
                    f"{where}.endpoints[{position}].location",
                    path,
                )
            if endpoint.lifetime is not None and not set(endpoint.lifetime) <= steps:
                raise ScenarioError(
                    "lifetime uses undeclared time steps",
                    f"{where}.endpoints[{position}].lifetime",
                    path,
                )


def parse_scenario(
    document: Any, path: Optional[str] = None, name: Optional[str] = None
) -> Scenario:
    """Validate a parsed scenario document and resolve its cross-references.

    Args:
        document: The parsed YAML document.
        path: File the document came from, used in error messages.
        name: Scenario name used when the document does not declare one.

    Returns:
        The validated scenario.

    Raises:
        ScenarioError: On schema violations, dangling ids or invalid values.
    """
    if not isinstance(document, dict):
        raise ScenarioError("scenario must be a mapping", path=path)
    try:
        doc = ScenarioDocument.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        raise ScenarioError(first["msg"], _format_location(first["loc"]), path) from e

    _check_unique((node.id for node in doc.nodes), "nodes", path)
    _check_unique((link.id for link in doc.links), "links", path)
    _check_unique((vnf.id for vnf in doc.vnfs), "vnfs", path)
    _check_unique((service.id for service in doc.services), "services", path)
    locations = _check_graph(doc, path)
    _check_services(doc, locations, path)

    graph = PhysicalGraph(
        nodes={node.id: node for node in doc.nodes},
        links={link.id: link for link in doc.links},
        locations=frozenset(locations),
        time_steps=doc.config.time_steps,
    )
    return Scenario(
        name=doc.name or name or "scenario",
        graph=graph,
        vnfs={vnf.id: vnf for vnf in doc.vnfs},
        services=doc.services,
        config=doc.config,
        costs=doc.costs,
    )


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Load and validate a scenario file.

    Args:
        path: Path to the YAML scenario document.

    Returns:
        The validated scenario.

    Raises:
        ScenarioError: If the file cannot be read, parsed or validated.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read scenario: {e}", path=str(path)) from e
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioError(f"invalid YAML: {e}", path=str(path)) from e

    scenario = parse_scenario(document, path=str(path), name=path.stem)
    logger.info(
        f"Loaded scenario {scenario.name}: {len(scenario.graph.nodes)} nodes, "
        f"{len(scenario.graph.links)} links, {len(scenario.services)} services"
    )
    return scenario


def dump_scenario(document: Dict[str, Any], path: Union[str, Path]) -> None:
    """Write a scenario document as YAML, keeping key order."""
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=False)
