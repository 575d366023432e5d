"""
Logger setup shared by the service classes
"""
import logging
from typing import Set

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

_configured: Set[str] = set()
_level = logging.INFO


def setup_logger(name: str) -> logging.Logger:
    """
    Return a named logger with one stream handler attached

    Args:
        name: Logger name, usually the class name

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
        logger.setLevel(_level)
    _configured.add(name)
    return logger


def set_verbosity(verbose: bool = False, level: str = 'INFO'):
    """Switch every project logger to DEBUG (verbose) or the given level"""
    global _level
    _level = logging.DEBUG if verbose else getattr(logging, str(level).upper(), logging.INFO)
    for name in _configured:
        logging.getLogger(name).setLevel(_level)
