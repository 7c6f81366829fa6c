"""Exception hierarchy for gridsched.

Hard failures raise one of these. Soft failures (zero incentive baseline, DNO stall,
ADMM iteration cap) are logged and flagged on the returned object instead.
"""

from typing import List, Optional


class GridSchedError(Exception):
    """Base class for every error raised by gridsched."""


class ScenarioError(GridSchedError):
    """A scenario document could not be accepted."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)


class SchemaError(ScenarioError):
    """Missing field, wrong type or unreadable scenario file."""


class InvariantError(ScenarioError):
    """Fields parse but violate a domain invariant (window too short, non-radial feeder...)."""


class NonRadialError(GridSchedError):
    pass


class DivergenceError(GridSchedError):
    """Load flow voltage collapsed below 0.5 pu."""


class NotConvergedError(GridSchedError):
    pass


class StepOutOfRange(GridSchedError):
    pass


class GridTooCoarse(GridSchedError):
    """The SOC grid cannot represent the battery's initial state."""


class InfeasibleWindow(GridSchedError):
    pass


class LengthMismatch(GridSchedError):
    pass


class ZeroBill(GridSchedError):
    pass


class ZeroProfile(GridSchedError):
    pass


class ScenarioMismatch(GridSchedError):
    pass


class TooLarge(GridSchedError):
    """Exhaustive enumeration would exceed the candidate cap."""
