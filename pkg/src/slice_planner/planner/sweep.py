"""Parameter sweeps: one plan per point on a fresh ledger."""

import asyncio
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import logfire

from slice_planner.errors import OracleLimitError
from slice_planner.graphs.ledger import ResidualLedger
from slice_planner.model.scenario import Scenario
from slice_planner.model.types import PlannerConfig
from slice_planner.oracle.brute_force import optimal
from slice_planner.planner.planner import PlanOutcome, Planner
from slice_planner.utils.config import CONFIG
from slice_planner.utils.logging_utils import get_logger

logger = get_logger("planner.sweep")


class SweepAxis(str, Enum):
    """Parameter varied by a sweep."""

    DELAY = "delay"
    LOAD = "load"
    RELIABILITY = "reliability"
    GAMMA = "gamma"


@dataclass(frozen=True)
class ServiceResult:
    service: str
    outcome: PlanOutcome
    elapsed_ms: float
    oracle: Optional[PlanOutcome] = None


@dataclass
class SweepPoint:
    """Outcomes of every service of the scenario at one axis value."""

    axis: SweepAxis
    value: float
    gamma: int
    results: List[ServiceResult] = field(default_factory=list)


def apply_axis(
    scenario: Scenario, axis: SweepAxis, value: float, gamma: Optional[int] = None
) -> Tuple[Scenario, PlannerConfig]:
    """Scenario and planner settings for one sweep point.

    The delay and reliability axes replace the targets of every service, the load
    axis multiplies every endpoint load and the gamma axis sets the resolution.

    Raises:
        ValueError: If the value is out of range for the axis.
    """
    axis = SweepAxis(axis)
    config = scenario.config
    if gamma is not None:
        config = config.model_copy(update={"gamma": gamma})
    if axis == SweepAxis.GAMMA:
        if value < 1 or int(value) != value:
            raise ValueError(f"gamma must be an integer >= 1, got {value}")
        return scenario, config.model_copy(update={"gamma": int(value)})
    if axis == SweepAxis.DELAY:
        if not value > 0:
            raise ValueError(f"delay target must be > 0, got {value}")
        services = [req.scaled(max_delay=value) for req in scenario.services]
    elif axis == SweepAxis.RELIABILITY:
        if not 0.0 < value < 1.0:
            raise ValueError(f"reliability target must lie in (0, 1), got {value}")
        services = [req.scaled(min_reliability=value) for req in scenario.services]
    else:
        if not value > 0:
            raise ValueError(f"load multiplier must be > 0, got {value}")
        services = [req.scaled(value) for req in scenario.services]
    return scenario.with_services(services), config


def run_point(
    scenario: Scenario,
    axis: SweepAxis,
    value: float,
    gamma: Optional[int] = None,
    with_oracle: bool = False,
) -> SweepPoint:
    """Plan every service of the scenario at one axis value, in declaration order."""
    point_scenario, config = apply_axis(scenario, axis, value, gamma)
    point = SweepPoint(SweepAxis(axis), value, config.gamma)
    with logfire.span("sweep_point", attributes={"axis": point.axis.value, "value": value}):
        ledger = ResidualLedger(point_scenario.graph)
        planner = Planner(point_scenario, config)
        oracle_ledger = ResidualLedger(point_scenario.graph) if with_oracle else None
        for req in point_scenario.services:
            started = time.perf_counter()
            outcome = planner.place(req, ledger)
            elapsed = (time.perf_counter() - started) * 1000.0
            reference = None
            if oracle_ledger is not None:
                try:
                    reference = optimal(req, point_scenario, oracle_ledger, config=config)
                except OracleLimitError as e:
                    logger.warning(
                        f"No oracle value for {req.id} at {point.axis.value}={value:g}: {e}"
                    )
            point.results.append(ServiceResult(req.id, outcome, elapsed, reference))
            logger.info(
                f"{point.axis.value}={value:g}: {req.id} {outcome.status.value}"
                + (f" cost {outcome.cost:.6g}" if outcome.accepted else "")
            )
    return point


def sweep(
    scenario: Scenario,
    axis: SweepAxis,
    values: Sequence[float],
    gamma: Optional[int] = None,
    with_oracle: bool = False,
) -> List[SweepPoint]:
    """Run one point per value, sequentially.

    Args:
        scenario: The scenario.
        axis: Parameter to vary.
        values: Axis values, in output order.
        gamma: Resolution for every point. Defaults to the scenario's.
        with_oracle: Also compute the brute-force optimum of each point.

    Returns:
        One point per value. Rejections are recorded, not raised.
    """
    attributes = {"scenario": scenario.name, "axis": SweepAxis(axis).value}
    with logfire.span("sweep", attributes=attributes):
        return [run_point(scenario, axis, value, gamma, with_oracle) for value in values]


async def sweep_async(
    scenario: Scenario,
    axis: SweepAxis,
    values: Sequence[float],
    gamma: Optional[int] = None,
    with_oracle: bool = False,
    workers: Optional[int] = None,
) -> List[SweepPoint]:
    """Run sweep points concurrently in worker threads; results keep the value order."""
    semaphore = asyncio.Semaphore(workers or CONFIG.get_int("SWEEP_WORKERS"))

    async def bounded(value: float) -> SweepPoint:
        async with semaphore:
            return await asyncio.to_thread(
                run_point, scenario, axis, value, gamma, with_oracle
            )

    return list(await asyncio.gather(*(bounded(value) for value in values)))
