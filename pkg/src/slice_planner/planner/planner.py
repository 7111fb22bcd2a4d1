"""Service planning: candidate search, CPU assignment, selection and commit.

``RequestPlacer`` drives a request endpoint by endpoint and chain by chain,
retries with an extra instance of the bottleneck VNF when every candidate runs
out of CPU, and commits the merged deployment atomically. ``Planner`` searches
each chain on the quantized expanded graph; the brute-force oracle plugs its own
exhaustive chain search into the same driver.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import logfire
from pydantic import BaseModel, ConfigDict, Field

from slice_planner.errors import AvailabilityError, LedgerError
from slice_planner.graphs.decision_graph import build_decision_graph
from slice_planner.graphs.expanded_graph import (
    assign_weights,
    expand,
    find_candidates,
    prune_availability,
)
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.kpi import evaluate_deployment
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import Deployment, Endpoint, PlannerConfig, ServiceRequest
from slice_planner.optimisation.cpu_assign import CAPACITY
from slice_planner.planner.costing import (
    LINK_CAPACITY,
    RESOURCE_CAPACITY,
    Hop,
    InstanceSlot,
    PricedPlacement,
    PricingFailure,
    chain_slots,
    delay_budget,
    hop_rules,
    price_placement,
)
from slice_planner.planner.decompose import ChainTask, decompose
from slice_planner.utils.config import CONFIG
from slice_planner.utils.logging_utils import get_logger

logfire.configure(
    send_to_logfire="if-token-present",
    service_name=CONFIG.get("LOGFIRE_SERVICE_NAME", "slice-planner"),
    console=False,
)

logger = get_logger("planner.planner")

CAPACITY_FAILURES = (CAPACITY, LINK_CAPACITY, RESOURCE_CAPACITY)


class PlanStatus(str, Enum):
    """Outcome of planning one service."""

    ACCEPTED = "accepted"
    REJECTED = "rejected"


class RejectReason(str, Enum):
    """Dominant cause of a rejection."""

    AVAILABILITY = "availability"
    ADDITIVE_KPI = "additive-kpi"
    DELAY = "delay"
    CAPACITY = "capacity"


class PlanOutcome(BaseModel):
    """Accepted deployment, or the reason the request was rejected."""

    model_config = ConfigDict(frozen=True)

    status: PlanStatus
    service: str
    gamma: int
    deployment: Optional[Deployment] = None
    reason: Optional[RejectReason] = None
    diagnostics: Dict[str, Any] = Field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.status == PlanStatus.ACCEPTED

    @property
    def cost(self) -> float:
        return self.deployment.cost.total if self.deployment is not None else math.nan


def path_reliability(scenario: Scenario, hops: Sequence[Hop], step: int) -> float:
    """Product of the reliability of every link and every node a route enters."""
    graph = scenario.graph
    value = 1.0
    for hop in hops:
        for link_id in hop.links:
            value *= graph.links[link_id].reliability.at(step)
        for node_id in hop.nodes[1:]:
            value *= graph.nodes[node_id].reliability.at(step)
    return value


@dataclass
class ChainContext:
    """Everything a chain search needs for one (endpoint, chain) placement."""

    req: ServiceRequest
    endpoint: Endpoint
    task: ChainTask
    slots: Tuple[InstanceSlot, ...]
    origin: str
    from_endpoint: bool
    ledger: ResidualLedger
    prior_reliability: Dict[int, float]
    steps: Tuple[int, ...]

    @property
    def reliability_targets(self) -> Optional[Dict[int, float]]:
        """Per time step, the reliability the chain's own route must reach.

        Earlier chains of the endpoint already used up part of the target at
        each step of its lifetime.
        """
        if self.req.min_reliability is None:
            return None
        target = self.req.min_reliability
        return {step: target / self.prior_reliability[step] for step in self.steps}


@dataclass
class ChainSearch:
    """Result of searching one chain."""

    best: Optional[PricedPlacement] = None
    no_candidates: Optional[RejectReason] = None
    failures: Counter = field(default_factory=Counter)
    capacity_failure: Optional[PricingFailure] = None
    stats: Dict[str, int] = field(default_factory=dict)

    def record(self, failure: PricingFailure) -> None:
        """Count a failure; among CPU failures keep the slowest bottleneck."""
        self.failures[failure.reason] += 1
        if failure.reason == CAPACITY and (
            self.capacity_failure is None
            or failure.bottleneck_time > self.capacity_failure.bottleneck_time
        ):
            self.capacity_failure = failure

    def offer(self, priced: PricedPlacement) -> None:
        if self.best is None or priced.cost < self.best.cost:
            self.best = priced

    def reason(self) -> RejectReason:
        if self.no_candidates is not None:
            return self.no_candidates
        if any(self.failures[cause] for cause in CAPACITY_FAILURES):
            return RejectReason.CAPACITY
        return RejectReason.DELAY


class _Rejection(Exception):
    def __init__(self, reason: RejectReason, diagnostics: Dict[str, Any]):
        self.reason = reason
        self.diagnostics = diagnostics
        super().__init__(reason.value)


class RequestPlacer:
    """Places a request chain by chain; subclasses provide the chain search."""

    span_name = "plan_request"

    def __init__(self, scenario: Scenario, config: Optional[PlannerConfig] = None):
        self.scenario = scenario
        self.config = config or scenario.config

    def search_chain(self, ctx: ChainContext) -> ChainSearch:
        raise NotImplementedError

    def place(self, req: ServiceRequest, ledger: ResidualLedger) -> PlanOutcome:
        """Plan a request against the ledger and commit it when accepted.

        Args:
            req: The service request.
            ledger: Residuals to plan against; updated only on acceptance.

        Returns:
            The outcome. Rejections leave the ledger untouched.
        """
        gamma = self.config.gamma
        with logfire.span(self.span_name, attributes={"service": req.id, "gamma": gamma}):
            stats: Dict[str, int] = Counter()
            working = ledger.copy()
            parts: List[Deployment] = []
            try:
                for endpoint in req.endpoints:
                    parts.extend(self._place_endpoint(req, endpoint, working, stats))
            except AvailabilityError as e:
                return self._rejected(
                    req, RejectReason.AVAILABILITY, {"endpoints": list(e.endpoints), **stats}
                )
            except _Rejection as e:
                return self._rejected(req, e.reason, {**e.diagnostics, **stats})
            except LedgerError as e:
                return self._rejected(req, RejectReason.CAPACITY, {"ledger": str(e), **stats})

            merged = Deployment.merge(req.id, parts, isolated=req.isolated)
            report = evaluate_deployment(merged, req, self.scenario, residual=ledger)
            if not report.feasible:
                logger.error(f"Deployment of {req.id} failed the KPI check: {report.violations}")
                reason = RejectReason.CAPACITY if not report.capacity_ok else RejectReason.DELAY
                return self._rejected(req, reason, {"violations": list(report.violations)})
            try:
                ledger.commit(merged)
            except LedgerError as e:
                return self._rejected(req, RejectReason.CAPACITY, {"ledger": str(e)})

            logger.info(f"Accepted {req.id} at gamma={gamma}: cost {merged.cost.total:.6g}")
            return PlanOutcome(
                status=PlanStatus.ACCEPTED,
                service=req.id,
                gamma=gamma,
                deployment=merged,
                diagnostics={"delay": report.delay, **stats},
            )

    def _rejected(
        self, req: ServiceRequest, reason: RejectReason, diagnostics: Dict[str, Any]
    ) -> PlanOutcome:
        logger.info(f"Rejected {req.id} at gamma={self.config.gamma}: {reason.value}")
        return PlanOutcome(
            status=PlanStatus.REJECTED,
            service=req.id,
            gamma=self.config.gamma,
            reason=reason,
            diagnostics=dict(diagnostics),
        )

    def _place_endpoint(
        self,
        req: ServiceRequest,
        endpoint: Endpoint,
        working: ResidualLedger,
        stats: Dict[str, int],
    ) -> List[Deployment]:
        steps = self.scenario.endpoint_steps(endpoint)
        prior = {step: 1.0 for step in steps}
        anchor_nodes: Dict[str, str] = {}
        parts: List[Deployment] = []
        for task in decompose(req):
            priced = self._place_task(req, endpoint, task, working, prior, anchor_nodes, stats)
            if priced is None:
                continue
            deployment = priced.deployment
            working.commit(deployment)
            parts.append(deployment)
            hops = deployment.routes[0].hops
            for step in steps:
                prior[step] *= path_reliability(self.scenario, hops, step)
            for placement in deployment.placements:
                anchor_nodes.setdefault(placement.vnf, placement.node)
        return parts

    def _place_task(
        self,
        req: ServiceRequest,
        endpoint: Endpoint,
        task: ChainTask,
        working: ResidualLedger,
        prior: Dict[int, float],
        anchor_nodes: Dict[str, str],
        stats: Dict[str, int],
    ) -> Optional[PricedPlacement]:
        chain = task.chain
        while True:
            current = ChainTask(task.index, chain, task.anchors)
            slots = chain_slots(current, chain, endpoint.load, anchor_nodes)
            if not slots:
                return None
            lead = current.leading_anchor
            from_endpoint = lead == 0
            origin = endpoint.location if from_endpoint else anchor_nodes[chain.vnfs[lead - 1]]
            ctx = ChainContext(
                req=req,
                endpoint=endpoint,
                task=current,
                slots=slots,
                origin=origin,
                from_endpoint=from_endpoint,
                ledger=working,
                prior_reliability=dict(prior),
                steps=self.scenario.endpoint_steps(endpoint),
            )
            result = self.search_chain(ctx)
            for key, value in result.stats.items():
                stats[key] = max(stats.get(key, 0), value)
            if result.best is not None:
                return result.best

            failure = result.capacity_failure
            if (
                failure is not None
                and failure.bottleneck is not None
                and chain.count(failure.bottleneck) < 1 + self.config.max_instance_replication
            ):
                chain = chain.with_extra_instance(failure.bottleneck)
                stats["replications"] = stats.get("replications", 0) + 1
                logger.warning(
                    f"{req.id}: CPU exhausted on every candidate, adding an instance of "
                    f"{failure.bottleneck} (now {chain.count(failure.bottleneck)})"
                )
                continue

            raise _Rejection(
                result.reason(),
                {
                    "endpoint": req.endpoint_id(endpoint),
                    "chain": task.index,
                    "failures": dict(result.failures),
                },
            )


class Planner(RequestPlacer):
    """Chain search over the quantized expanded graph."""

    def search_chain(self, ctx: ChainContext) -> ChainSearch:
        scenario = self.scenario
        req = ctx.req
        graph = scenario.graph
        n = len(ctx.slots)
        search = ChainSearch()

        targets = ctx.reliability_targets
        if targets is not None and max(targets.values()) >= 1.0:
            search.no_candidates = RejectReason.ADDITIVE_KPI
            return search

        dg = build_decision_graph(
            graph, ctx.ledger, req,
            n_copies=n if ctx.from_endpoint else n + 1,
            k_paths=self.config.k_paths,
        )
        first_vnf = scenario.vnfs[ctx.slots[0].vnf] if ctx.from_endpoint else None
        dg = prune_availability(
            dg, req, graph, first_vnf,
            steps=ctx.steps,
            endpoints=[req.endpoint_id(ctx.endpoint)],
        )
        weighted = assign_weights(dg, req.max_delay, targets, steps=ctx.steps)
        source = (
            dg.endpoint(req.endpoint_id(ctx.endpoint)) if ctx.from_endpoint
            else dg.compute(ctx.origin, 0)
        )

        rules = hop_rules(scenario, req, ctx.ledger, ctx.slots)
        xg = expand(weighted, self.config.gamma, min(rule.demand for rule in rules))
        search.stats = {
            "decision_vertices": len(dg.vertices),
            "decision_edges": len(dg.edges),
            "expanded_vertices": xg.vertex_count,
            "expanded_edges": xg.edge_count,
        }
        candidates = find_candidates(
            xg, source, n, self.config.max_candidates, rules, steps=ctx.steps
        )
        if not candidates:
            relaxed = find_candidates(
                expand(weighted, self.config.gamma, 0.0),
                source,
                n,
                self.config.max_candidates,
                hop_rules(scenario, req, ctx.ledger, ctx.slots, relaxed=True),
                steps=ctx.steps,
            )
            search.no_candidates = (
                RejectReason.CAPACITY if relaxed else RejectReason.ADDITIVE_KPI
            )
            return search

        budget = delay_budget(req)
        for candidate in candidates:
            if search.best is not None and search.best.cost <= candidate.provisional_cost:
                break
            hops = [Hop(edge.head.name, edge.nodes, edge.links) for edge in candidate.edges]
            priced = price_placement(
                scenario, req, ctx.ledger, ctx.endpoint, ctx.task.index, ctx.origin,
                ctx.slots, hops, budget,
            )
            if isinstance(priced, PricingFailure):
                search.record(priced)
            else:
                search.offer(priced)
        return search


def plan(
    req: ServiceRequest,
    scenario: Scenario,
    ledger: ResidualLedger,
    config: Optional[PlannerConfig] = None,
) -> PlanOutcome:
    """Plan one service request and commit it to the ledger when accepted.

    This is a convenience function that builds a ``Planner`` for the scenario.
    """
    return Planner(scenario, config).place(req, ledger)


def plan_all(
    scenario: Scenario,
    ledger: Optional[ResidualLedger] = None,
    config: Optional[PlannerConfig] = None,
    services: Optional[Sequence[ServiceRequest]] = None,
) -> Tuple[ResidualLedger, List[PlanOutcome]]:
    """Plan services one after another on a shared ledger."""
    ledger = ledger or ResidualLedger(scenario.graph)
    planner = Planner(scenario, config)
    outcomes = [planner.place(req, ledger) for req in (services or scenario.services)]
    return ledger, outcomes

