"""
Data models package for the NSF statistics toolkit
"""

from .fields import Grid, ScalarField, VectorField, State, PhaseNorms
from .field_spec import Mode, FieldSpec, build_fields, state_from_specs
from .parameters import Parameters, Forcing, SolverConfig, StoppingConfig, MetricConfig
from .trajectory import DiagnosticsRecord, Trajectory, DIAGNOSTICS_COLUMNS
from .stopping import StopReason, StoppingRecord
from .extended_state import ExtendedState
from .ensemble import (
    DataDistribution,
    EnsembleEstimate,
    ProductEstimate,
    SLLNStudy,
    MarkovReport,
    record_summary,
    optional_float,
)

__all__ = [
    'Grid', 'ScalarField', 'VectorField', 'State', 'PhaseNorms',
    'Mode', 'FieldSpec', 'build_fields', 'state_from_specs',
    'Parameters', 'Forcing', 'SolverConfig', 'StoppingConfig', 'MetricConfig',
    'DiagnosticsRecord', 'Trajectory', 'DIAGNOSTICS_COLUMNS',
    'StopReason', 'StoppingRecord', 'ExtendedState',
    'DataDistribution', 'EnsembleEstimate', 'ProductEstimate', 'SLLNStudy', 'MarkovReport',
    'record_summary', 'optional_float',
]
