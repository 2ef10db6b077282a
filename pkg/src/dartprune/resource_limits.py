"""
Guards against inputs that would exhaust the machine

- token / attention files larger than any realistic layer dump
- matrices that do not fit in the memory still available
- brute-force paths (reference pruner, subset enumeration) past their size caps
"""
from pathlib import Path
from typing import Dict, Optional

import psutil

from dartprune.errors import TooLarge
from dartprune.logging_config import get_logger

logger = get_logger(__name__)

_MB = 1024 * 1024


class ResourceLimitError(Exception):
    """Raised when a resource limit is exceeded"""
    pass


class ResourceLimits:
    """Configuration for resource limits"""

    # Input files
    MAX_FILE_SIZE_MB = 4096
    MAX_FILE_SIZE_BYTES = MAX_FILE_SIZE_MB * _MB

    # Memory
    MAX_MEMORY_PERCENT = 95
    MAX_MEMORY_PER_RUN_MB = 16384
    # float64 working copies made while scoring, relative to the float32 input
    MATRIX_OVERHEAD = 4

    # Quadratic / exponential reference paths
    MAX_ORACLE_TOKENS = 256
    MAX_EXHAUSTIVE_TOKENS = 12


def _process_rss_mb() -> float:
    return psutil.Process().memory_info().rss / _MB


class ResourceValidator:
    """Validates resources against limits"""

    @staticmethod
    def validate_file_size(file_path: str) -> None:
        """
        Raises:
            ResourceLimitError: missing, unreadable or oversized file
        """
        try:
            size = Path(file_path).stat().st_size
        except FileNotFoundError:
            raise ResourceLimitError(f"File not found: {file_path}")
        except OSError as e:
            raise ResourceLimitError(f"Cannot stat {file_path}: {e}")

        if size > ResourceLimits.MAX_FILE_SIZE_BYTES:
            logger.error("file_too_large", file=file_path, size_mb=round(size / _MB, 2),
                         limit_mb=ResourceLimits.MAX_FILE_SIZE_MB)
            raise ResourceLimitError(
                f"{file_path} is {size / _MB:.1f}MB, above the {ResourceLimits.MAX_FILE_SIZE_MB}MB input limit"
            )

    @staticmethod
    def validate_memory_usage() -> None:
        """
        Check process RSS and system memory pressure

        psutil failures are logged and otherwise ignored.

        Raises:
            ResourceLimitError: either figure above its limit
        """
        try:
            rss_mb = _process_rss_mb()
            system_percent = psutil.virtual_memory().percent
        except psutil.Error as e:
            logger.warning("memory_check_failed", error=str(e))
            return

        if rss_mb > ResourceLimits.MAX_MEMORY_PER_RUN_MB:
            logger.error("memory_limit_exceeded", process_memory_mb=round(rss_mb, 2),
                         limit_mb=ResourceLimits.MAX_MEMORY_PER_RUN_MB)
            raise ResourceLimitError(
                f"Process uses {rss_mb:.0f}MB, above the {ResourceLimits.MAX_MEMORY_PER_RUN_MB}MB run limit"
            )
        if system_percent > ResourceLimits.MAX_MEMORY_PERCENT:
            logger.error("system_memory_high", percent=system_percent, limit=ResourceLimits.MAX_MEMORY_PERCENT)
            raise ResourceLimitError(
                f"System memory at {system_percent:.1f}%, above {ResourceLimits.MAX_MEMORY_PERCENT}%"
            )

    @staticmethod
    def validate_matrix_allocation(n: int, d: int) -> None:
        """
        Refuse an n x d float matrix that cannot fit in available memory

        Raises:
            ResourceLimitError: estimated working set above available memory
        """
        needed_mb = n * d * 4 * ResourceLimits.MATRIX_OVERHEAD / _MB
        try:
            available_mb = psutil.virtual_memory().available / _MB
        except psutil.Error as e:
            logger.warning("memory_check_failed", error=str(e))
            return

        if needed_mb > available_mb:
            logger.error("matrix_too_large", n=n, d=d, needed_mb=round(needed_mb, 1),
                         available_mb=round(available_mb, 1))
            raise ResourceLimitError(
                f"A {n}x{d} token matrix needs about {needed_mb:.0f}MB, only {available_mb:.0f}MB available"
            )

    @staticmethod
    def validate_oracle_size(n: int) -> None:
        if n > ResourceLimits.MAX_ORACLE_TOKENS:
            raise TooLarge(
                f"Brute-force oracle limited to {ResourceLimits.MAX_ORACLE_TOKENS} tokens, got {n}",
                n=n,
                limit=ResourceLimits.MAX_ORACLE_TOKENS,
            )

    @staticmethod
    def validate_exhaustive_size(n: int) -> None:
        # C(n, b) subsets
        if n > ResourceLimits.MAX_EXHAUSTIVE_TOKENS:
            raise TooLarge(
                f"Exhaustive enumeration limited to {ResourceLimits.MAX_EXHAUSTIVE_TOKENS} tokens, got {n}",
                n=n,
                limit=ResourceLimits.MAX_EXHAUSTIVE_TOKENS,
            )

    @staticmethod
    def get_memory_stats() -> Dict[str, Optional[float]]:
        """Process RSS and system memory use next to their limits, for debug logs"""
        stats: Dict[str, Optional[float]] = {
            "process_memory_mb": None,
            "process_memory_limit_mb": ResourceLimits.MAX_MEMORY_PER_RUN_MB,
            "system_memory_percent": None,
            "system_memory_limit_percent": ResourceLimits.MAX_MEMORY_PERCENT,
        }
        try:
            stats["process_memory_mb"] = round(_process_rss_mb(), 2)
            stats["system_memory_percent"] = psutil.virtual_memory().percent
        except psutil.Error as e:
            logger.warning("memory_stats_failed", error=str(e))
        return stats
