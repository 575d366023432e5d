"""
Extended semigroup package
"""

from .extended_semigroup import (
    ExtendedSemigroup,
    ExtendedTrajectory,
    StabilityReport,
    stopping_time,
    evolve_extended,
    default_perturbation,
)

__all__ = [
    'ExtendedSemigroup', 'ExtendedTrajectory', 'StabilityReport', 'stopping_time',
    'evolve_extended', 'default_perturbation',
]
