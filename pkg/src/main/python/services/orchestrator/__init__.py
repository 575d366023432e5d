"""
Run orchestration package
"""

from .run_orchestrator import RunOrchestrator, run, MANIFEST_FILE

__all__ = ['RunOrchestrator', 'run', 'MANIFEST_FILE']
