"""Error classes for the slice planner.

This module defines the exception hierarchy shared by the scenario loader, the
residual ledger, the planner and the brute-force oracle.
"""

from typing import Iterable, Optional


class SlicePlannerError(Exception):
    """Base class for all slice planner errors."""
    pass


class ScenarioError(SlicePlannerError):
    """Error raised when a scenario document fails validation."""

    def __init__(self, message: str, location: str = "", path: Optional[str] = None):
        self.location = location
        self.path = path
        prefix = f"{path}: " if path else ""
        where = f"{location}: " if location else ""
        super().__init__(f"{prefix}{where}{message}")


class LedgerError(SlicePlannerError):
    """Error raised when a commit or rollback cannot be applied to the ledger."""
    pass


class InfeasibleError(SlicePlannerError):
    """Base class for planning infeasibility signals."""
    pass


class AvailabilityError(InfeasibleError):
    """Error raised when an endpoint keeps no adjacent edge after pruning."""

    def __init__(self, endpoints: Iterable[str]):
        self.endpoints = tuple(endpoints)
        super().__init__(f"No node covers endpoint(s): {', '.join(self.endpoints)}")


class OracleLimitError(SlicePlannerError):
    """Error raised when a brute-force instance exceeds the declared limits."""
    pass
