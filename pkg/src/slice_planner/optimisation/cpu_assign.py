"""Minimum-cost CPU assignment for a fixed placement.

Each placed instance is an M/M/1-PS queue with mean delay ``1 / (a_i - b_i)``.
The problem

    min  sum_i c_i * a_i
    s.t. sum_i 1 / (a_i - b_i) <= T,   b_i < a_i <= cap_i

is convex and separable with a single coupling constraint. Its KKT conditions give

    a_i = b_i + S / (T * sqrt(c_i)),   S = sum_j sqrt(c_j)

with the delay constraint active. Instances whose unconstrained value exceeds
their cap are pinned at the cap and the remaining budget is re-split among the
others; pinning can only raise the others' values, so violators are pinned all
at once each round.
"""

import math
from dataclasses import dataclass
from typing import Literal, Tuple, Union

from slice_planner.utils.logging_utils import get_logger

logger = get_logger("optimisation.cpu_assign")

CAPACITY = "cpu-capacity"
DELAY = "delay"


@dataclass(frozen=True)
class CpuProblem:
    """CPU assignment problem of one candidate placement.

    Attributes:
        unit_costs: Cost per CPU unit of each instance's host.
        loads: ``b_i = r_cpu(v_i) * lambda_i`` in service-rate units.
        caps: CPU available to each instance.
        network_delay: Network delay of the route in ms.
        max_delay: Delay target in ms.
        vnfs: VNF of each instance, used to name the bottleneck.
    """

    unit_costs: Tuple[float, ...]
    loads: Tuple[float, ...]
    caps: Tuple[float, ...]
    network_delay: float
    max_delay: float
    vnfs: Tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.unit_costs)
        if len(self.loads) != n or len(self.caps) != n:
            raise ValueError("unit_costs, loads and caps must have the same length")
        if self.vnfs and len(self.vnfs) != n:
            raise ValueError("vnfs must name every instance")
        if any(c <= 0 for c in self.unit_costs):
            raise ValueError("unit costs must be > 0")
        if any(b < 0 for b in self.loads):
            raise ValueError("loads must be >= 0")

    @property
    def budget(self) -> float:
        return self.max_delay - self.network_delay


@dataclass(frozen=True)
class CpuSolution:
    assignment: Tuple[float, ...]
    processing_delay: float
    cost: float
    clamped: Tuple[bool, ...]


@dataclass(frozen=True)
class Infeasible:
    """No assignment meets the delay target."""

    reason: Literal["cpu-capacity", "delay"]
    detail: str = ""


def solve(p: CpuProblem) -> Union[CpuSolution, Infeasible]:
    """Solve the CPU assignment problem in closed form.

    Args:
        p: The problem.

    Returns:
        The optimal assignment, or Infeasible naming why none exists.
    """
    n = len(p.unit_costs)
    if n == 0:
        if p.budget < 0:
            return Infeasible(DELAY, "network delay exceeds the target")
        return CpuSolution((), 0.0, 0.0, ())
    for i in range(n):
        if p.caps[i] <= p.loads[i]:
            return Infeasible(CAPACITY, f"instance {i} has no CPU headroom")
    budget = p.budget
    if budget <= 0:
        return Infeasible(DELAY, f"no delay budget left ({budget:.6g} ms)")

    assignment = [0.0] * n
    clamped = [False] * n
    free = list(range(n))
    while True:
        spread = sum(math.sqrt(p.unit_costs[i]) for i in free)
        for i in free:
            assignment[i] = p.loads[i] + spread / (budget * math.sqrt(p.unit_costs[i]))
        violators = [i for i in free if assignment[i] > p.caps[i]]
        if not violators:
            break
        for i in violators:
            assignment[i] = p.caps[i]
            clamped[i] = True
            budget -= 1.0 / (p.caps[i] - p.loads[i])
        free = [i for i in free if not clamped[i]]
        logger.debug(f"Pinned {len(violators)} instance(s) at their cap, {budget:.6g} ms left")
        if budget <= 0 or not free:
            return Infeasible(CAPACITY, "delay target unreachable within CPU caps")

    delay = sum(1.0 / (assignment[i] - p.loads[i]) for i in range(n))
    cost = sum(p.unit_costs[i] * assignment[i] for i in range(n))
    return CpuSolution(tuple(assignment), delay, cost, tuple(clamped))


def best_processing_times(p: CpuProblem) -> Tuple[float, ...]:
    """Processing time of each instance when given all of its cap."""
    return tuple(
        1.0 / (cap - load) if cap > load else math.inf for cap, load in zip(p.caps, p.loads)
    )


def bottleneck_vnf(p: CpuProblem) -> str:
    """The VNF taking longest to process at its best achievable assignment.

    Ties go to the earliest instance in chain order.
    """
    times = best_processing_times(p)
    worst = 0
    for i, value in enumerate(times):
        if value > times[worst]:
            worst = i
    return p.vnfs[worst] if p.vnfs else str(worst)
