"""
Logging setup: a single loguru sink on standard error.
"""
import sys
from typing import Optional

import loguru

from app.core.config import settings

logger = loguru.logger


def configure_logging(level: Optional[str] = None) -> None:
    """Replace loguru's default sink with one stderr sink at the given level."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.log_level).upper(),
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {name}:{function} - {message}",
    )
