"""Result rows and their comma-separated output.

Columns, in order:

    scenario, service, axis, value, gamma, outcome, reason,
    total_cost, instantiation_cost, resource_cost, transport_cost,
    max_delay_ms, min_reliability, poas, nodes, tiers, tier_traffic,
    oracle_cost[, elapsed_ms]

Numbers use ``format(x, ".10g")`` so output does not depend on the locale; empty
cells mean "not applicable". Lists inside a cell are separated by ``;`` and the
tier columns hold ``tier:value`` pairs sorted by tier. ``elapsed_ms`` is only
written on request since it is the one column that changes between runs.
"""

import csv
import math
import sys
from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Union

from pydantic import BaseModel, ConfigDict

from slice_planner.model.kpi import evaluate_deployment
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import Deployment, ServiceRequest
from slice_planner.planner.planner import PlanOutcome
from slice_planner.planner.sweep import SweepPoint
from slice_planner.utils.config import CONFIG
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("cli.results")

UNTIERED = "untiered"


class ResultRow(BaseModel):
    """One planned service at one point of a run."""

    model_config = ConfigDict(frozen=True)

    scenario: str
    service: str
    axis: str = ""
    value: Optional[float] = None
    gamma: int
    outcome: str
    reason: str = ""
    total_cost: Optional[float] = None
    instantiation_cost: Optional[float] = None
    resource_cost: Optional[float] = None
    transport_cost: Optional[float] = None
    max_delay_ms: Optional[float] = None
    min_reliability: Optional[float] = None
    poas: str = ""
    nodes: str = ""
    tiers: str = ""
    tier_traffic: str = ""
    oracle_cost: Optional[float] = None
    elapsed_ms: Optional[float] = None


COLUMNS = tuple(name for name in ResultRow.model_fields if name != "elapsed_ms")


def format_number(value: Optional[float]) -> str:
    if value is None or math.isnan(value):
        return ""
    return format(value, ".10g")


def _pairs(values: Dict[str, float]) -> str:
    return ";".join(f"{tier}:{format_number(values[tier])}" for tier in sorted(values))


def tier_mix(dep: Deployment, scenario: Scenario) -> str:
    """Number of distinct hosts per tier."""
    counts = Counter(scenario.graph.nodes[node].tier or UNTIERED for node in dep.hosts())
    return _pairs(dict(counts))


def tier_traffic(dep: Deployment, scenario: Scenario) -> str:
    """Share of the carried traffic entering nodes of each tier."""
    graph = scenario.graph
    carried: Dict[str, float] = defaultdict(float)
    for route in dep.routes:
        for hop in route.hops:
            entered = {graph.nodes[node].tier or UNTIERED for node in hop.nodes[1:]}
            for tier in entered:
                carried[tier] += hop.traffic
    total = sum(carried.values())
    if total <= 0:
        return ""
    return _pairs({tier: amount / total for tier, amount in carried.items()})


def result_row(
    scenario: Scenario,
    req: ServiceRequest,
    outcome: PlanOutcome,
    axis: str = "",
    value: Optional[float] = None,
    oracle: Optional[PlanOutcome] = None,
    elapsed_ms: Optional[float] = None,
) -> ResultRow:
    """Summarize one outcome as a result row."""
    fields = {
        "scenario": scenario.name,
        "service": req.id,
        "axis": axis,
        "value": value,
        "gamma": outcome.gamma,
        "outcome": outcome.status.value,
        "reason": outcome.reason.value if outcome.reason is not None else "",
        "oracle_cost": oracle.cost if oracle is not None and oracle.accepted else None,
        "elapsed_ms": elapsed_ms,
    }
    dep = outcome.deployment
    if dep is not None:
        report = evaluate_deployment(dep, req, scenario)
        fields.update(
            total_cost=dep.cost.total,
            instantiation_cost=dep.cost.instantiation,
            resource_cost=dep.cost.resource,
            transport_cost=dep.cost.transport,
            max_delay_ms=max(report.delay.values(), default=None),
            min_reliability=min(
                (r for per_step in report.reliability.values() for r in per_step.values()),
                default=None,
            ),
            poas=";".join(dep.points_of_access(scenario.graph.nodes)),
            nodes=";".join(dep.hosts()),
            tiers=tier_mix(dep, scenario),
            tier_traffic=tier_traffic(dep, scenario),
        )
    return ResultRow(**fields)


def sweep_rows(scenario: Scenario, points: Iterable[SweepPoint]) -> List[ResultRow]:
    """One row per (point, service), in point order then declaration order."""
    rows = []
    for point in points:
        for result in point.results:
            rows.append(
                result_row(
                    scenario,
                    scenario.service(result.service),
                    result.outcome,
                    axis=point.axis.value,
                    value=point.value,
                    oracle=result.oracle,
                    elapsed_ms=result.elapsed_ms,
                )
            )
    return rows


def resolve_output(out: Union[str, Path]) -> Path:
    """A bare file name goes to the results directory; any other path is used as is."""
    path = Path(out)
    if path.parent == Path("."):
        path = Path(CONFIG.get("RESULTS_DIR", "results")) / path
    return path


def _cells(row: ResultRow, columns: Iterable[str]) -> List[str]:
    cells = []
    for column in columns:
        item = getattr(row, column)
        if item is None:
            cells.append("")
        elif isinstance(item, float):
            cells.append(format_number(item))
        else:
            cells.append(str(item))
    return cells


def write_rows(
    rows: Iterable[ResultRow], out: Optional[Union[str, Path]] = None, timing: bool = False
) -> Optional[Path]:
    """Write rows as CSV to ``out``, or to stdout when no path is given.

    Returns:
        The file written, or None for stdout.
    """
    columns = COLUMNS + ("elapsed_ms",) if timing else COLUMNS
    if out is None:
        _write(sys.stdout, rows, columns)
        return None
    path = resolve_output(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        _write(f, rows, columns)
    logger.info(f"Wrote results to {path}")
    return path


def _write(stream, rows: Iterable[ResultRow], columns) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(_cells(row, columns))
