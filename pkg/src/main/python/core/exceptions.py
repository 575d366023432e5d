"""
Exception hierarchy for the NSF statistics toolkit
"""
from typing import Any, List, Optional


class NSFError(Exception):
    """Base class for every error raised by the toolkit"""
    pass


class NonFiniteField(NSFError):
    """A field holds NaN or infinite samples"""
    pass


class OutOfBand(NSFError):
    """A wavevector is not resolvable on the grid"""
    pass


class GridMismatch(NSFError):
    """Two fields or states live on different grids"""
    pass


class NotInXPlus(NSFError):
    """Density or temperature is not strictly positive"""
    pass


class StepRejected(NSFError):
    """A Runge-Kutta stage left the admissible set"""
    pass


class StiffnessBreakdown(NSFError):
    """
    The time step fell below dt_min

    The trajectory recorded up to the failure is attached so callers can
    still censor it.
    """

    def __init__(self, message: str, trajectory: Optional[Any] = None):
        super().__init__(message)
        self.trajectory = trajectory


class DistributionInfeasible(NSFError):
    """Rejection sampling could not meet the positivity margins"""
    pass


class ConfigRejected(NSFError):
    """A run configuration failed validation"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__(
            "Configuration rejected:\n" + "\n".join(f"  - {v}" for v in self.violations)
        )


class RunError(NSFError):
    """A module error surfaced by the orchestrator, with context"""

    def __init__(self, message: str, member: Optional[int] = None, context: str = ""):
        self.member = member
        self.context = context
        prefix = f"[member {member}] " if member is not None else ""
        suffix = f" ({context})" if context else ""
        super().__init__(f"{prefix}{message}{suffix}")
