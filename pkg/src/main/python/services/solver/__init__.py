"""
Navier-Stokes-Fourier solver package
"""

from .nsf_solver import (
    NSFSolver,
    LowerBoundReport,
    rhs,
    step,
    solve,
    diagnostics,
    entropy_production_rate,
    lower_bound_monitor,
    linearized_modes,
    linearized_evolution,
    write_diagnostics_csv,
)

__all__ = [
    'NSFSolver', 'LowerBoundReport', 'rhs', 'step', 'solve', 'diagnostics',
    'entropy_production_rate', 'lower_bound_monitor', 'linearized_modes',
    'linearized_evolution', 'write_diagnostics_csv',
]
