"""Exhaustive placement search used as the reference optimum on small instances.

For every chain the oracle enumerates each assignment of instances to hosts and
every simple physical path (string) realizing each hop, prices every combination
with the same CPU assignment and cost model as the planner, and keeps the
cheapest one meeting the reliability target. Each flow is routed on a single
string. Instances beyond the configured limits are refused, never truncated.
"""

from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import logfire
import networkx as nx

from slice_planner.errors import AvailabilityError, OracleLimitError
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import OracleLimits, PlannerConfig, ServiceRequest
from slice_planner.planner.costing import (
    Hop,
    PricingFailure,
    allowed_hosts,
    delay_budget,
    price_placement,
)
from slice_planner.planner.planner import (
    ChainContext,
    ChainSearch,
    PlanOutcome,
    RejectReason,
    RequestPlacer,
    path_reliability,
)
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("oracle.brute_force")

RELIABILITY = "reliability"


class BruteForceOracle(RequestPlacer):
    """Chain search by full enumeration of hosts and strings."""

    span_name = "oracle_request"

    def __init__(
        self,
        scenario: Scenario,
        config: Optional[PlannerConfig] = None,
        limits: Optional[OracleLimits] = None,
    ):
        super().__init__(scenario, config)
        self.limits = limits or self.config.oracle
        graph = scenario.graph
        compute = set(graph.compute_nodes())
        self._routing_only = [node for node in graph.nodes if node not in compute]
        self._core = graph.topology.subgraph(list(graph.nodes))
        self._strings: Dict[Tuple[str, str], List[Hop]] = {}

        if len(compute) > self.limits.max_nodes:
            self._refuse(
                f"{len(compute)} compute nodes exceed the limit of {self.limits.max_nodes}"
            )

    def _refuse(self, message: str) -> None:
        logger.warning(f"Oracle refused {self.scenario.name}: {message}")
        raise OracleLimitError(message)

    def strings(self, source: str, target: str) -> List[Hop]:
        """Every simple path from ``source`` to the host ``target`` within the hop bound.

        A path leaving a location may only cross routing nodes; paths between
        hosts stay on nodes. A hop onto the node the previous instance runs on
        uses the empty string.
        """
        key = (source, target)
        if key in self._strings:
            return self._strings[key]
        graph = self.scenario.graph
        if source == target:
            hops = [Hop(target, (target,), ())]
        else:
            if graph.is_location(source):
                view = graph.topology.subgraph([source, target, *self._routing_only])
            else:
                view = self._core
            hops = []
            if source in view and target in view:
                paths = nx.all_simple_paths(view, source, target, cutoff=self.limits.max_hops)
                for path in sorted(paths, key=lambda p: (len(p), p)):
                    links = tuple(graph.link_between(u, v).id for u, v in zip(path, path[1:]))
                    hops.append(Hop(target, tuple(path), links))
        self._strings[key] = hops
        return hops

    def _host_sets(self, ctx: ChainContext) -> List[List[str]]:
        graph = self.scenario.graph
        host_sets = []
        for position, slot in enumerate(ctx.slots):
            hosts = sorted(allowed_hosts(self.scenario, slot))
            if position == 0 and ctx.from_endpoint:
                location = ctx.endpoint.location
                hosts = [node for node in hosts if location in graph.nodes[node].coverage]
                if not hosts:
                    raise AvailabilityError([ctx.req.endpoint_id(ctx.endpoint)])
            host_sets.append(hosts)
        return host_sets

    def count_combinations(self, origin: str, host_sets: Sequence[Sequence[str]]) -> int:
        """Number of (host assignment, strings) combinations, counted without enumerating."""
        ways = {origin: 1}
        for hosts in host_sets:
            ways = {
                host: sum(count * len(self.strings(prev, host)) for prev, count in ways.items())
                for host in hosts
            }
        return sum(ways.values())

    def search_chain(self, ctx: ChainContext) -> ChainSearch:
        req = ctx.req
        search = ChainSearch()
        if len(ctx.slots) > self.limits.max_chain_len:
            self._refuse(
                f"{len(ctx.slots)} instances in a chain exceed the limit of "
                f"{self.limits.max_chain_len}"
            )
        host_sets = self._host_sets(ctx)
        combinations = self.count_combinations(ctx.origin, host_sets)
        if combinations > self.limits.max_strings:
            self._refuse(
                f"{combinations} combinations exceed the limit of {self.limits.max_strings}"
            )
        search.stats = {"oracle_combinations": combinations}
        logger.debug(f"Oracle enumerating {combinations} combinations for {req.id}")

        budget = delay_budget(req)
        for hosts in product(*host_sets):
            previous = [ctx.origin, *hosts[:-1]]
            options = [self.strings(p, h) for p, h in zip(previous, hosts)]
            for hops in product(*options):
                if not self._reliable(ctx, hops):
                    search.failures[RELIABILITY] += 1
                    continue
                priced = price_placement(
                    self.scenario, req, ctx.ledger, ctx.endpoint, ctx.task.index, ctx.origin,
                    ctx.slots, hops, budget,
                )
                if isinstance(priced, PricingFailure):
                    search.record(priced)
                else:
                    search.offer(priced)

        if search.best is None and sum(search.failures.values()) == search.failures[RELIABILITY]:
            search.no_candidates = RejectReason.ADDITIVE_KPI
        return search

    def _reliable(self, ctx: ChainContext, hops: Sequence[Hop]) -> bool:
        target = ctx.req.min_reliability
        if target is None:
            return True
        return all(
            ctx.prior_reliability[step] * path_reliability(self.scenario, hops, step) >= target
            for step in ctx.steps
        )


def optimal(
    req: ServiceRequest,
    scenario: Scenario,
    ledger: ResidualLedger,
    limits: Optional[OracleLimits] = None,
    config: Optional[PlannerConfig] = None,
) -> PlanOutcome:
    """Find the minimum-cost deployment of a request by exhaustive search.

    Args:
        req: The service request.
        scenario: The scenario.
        ledger: Residuals to plan against; updated only on acceptance.
        limits: Enumeration bounds. Defaults to the configuration's oracle limits.
        config: Planner settings. Defaults to the scenario's.

    Returns:
        The optimal outcome.

    Raises:
        OracleLimitError: If the instance exceeds the limits.
    """
    with logfire.span("oracle_optimal", attributes={"scenario": scenario.name}):
        return BruteForceOracle(scenario, config, limits).place(req, ledger)
