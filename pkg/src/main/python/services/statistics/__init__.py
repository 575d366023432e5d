"""
Ensemble statistics package
"""

from .sampling import sample_initial_data, sample_member, member_rng, active_modes
from .empirical_measure import EmpiricalMeasure
from .ensemble_engine import (
    EnsembleEngine,
    MemberTask,
    MemberOutcome,
    run_member,
    replicate_seed,
    sorted_sum,
    bitwise_equal,
    combine_atoms,
    pushforward_estimate,
    observable_table,
)

__all__ = [
    'sample_initial_data', 'sample_member', 'member_rng', 'active_modes', 'EmpiricalMeasure',
    'EnsembleEngine', 'MemberTask', 'MemberOutcome', 'run_member', 'replicate_seed',
    'sorted_sum', 'bitwise_equal', 'combine_atoms', 'pushforward_estimate', 'observable_table',
]
