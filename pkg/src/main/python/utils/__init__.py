"""
Utility functions package
"""

from .logging_utils import setup_logger, set_verbosity
from .field_io import write_snapshot, read_snapshot, write_state, read_state
from .result_exporter import ResultExporter, sha256_file

__all__ = [
    'setup_logger', 'set_verbosity', 'write_snapshot', 'read_snapshot', 'write_state',
    'read_state', 'ResultExporter', 'sha256_file',
]
