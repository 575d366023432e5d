"""
Run configuration package
"""

from .run_config import (
    SCHEMA_VERSION,
    MODES,
    ForcingSpec,
    InitialSpec,
    RunConfig,
    RunManifest,
    ingest_config,
    config_hash,
)

__all__ = [
    'SCHEMA_VERSION', 'MODES', 'ForcingSpec', 'InitialSpec', 'RunConfig', 'RunManifest',
    'ingest_config', 'config_hash',
]
