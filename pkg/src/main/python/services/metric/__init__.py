"""
Phase-space metric package
"""

from .phase_metric import (
    ConvergenceMode,
    MetricEmbedding,
    MetricIndex,
    PhaseMetric,
    G_weight,
    cutoff_G_n,
    embed,
    metric_d,
    tail_bound,
    convergence_mode,
    censored_moment_map,
    distance_table,
)
from .observables import (
    Observable,
    ObservableFactory,
    make_observable,
    constant_observable,
    state_functionals,
)

__all__ = [
    'ConvergenceMode', 'MetricEmbedding', 'MetricIndex', 'PhaseMetric', 'G_weight',
    'cutoff_G_n', 'embed', 'metric_d', 'tail_bound', 'convergence_mode',
    'censored_moment_map', 'Observable', 'ObservableFactory', 'make_observable',
    'constant_observable', 'state_functionals', 'distance_table',
]
