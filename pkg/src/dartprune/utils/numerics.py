"""Numeric conventions shared by every module"""
import numpy as np

# Scores are snapped to this many decimals before ranking, so equal tokens
# tie exactly whatever order BLAS accumulated their dot products in.
SCORE_DECIMALS = 12

# Norms below this count as zero; cosine against a zero row is 0.
ZERO_NORM_EPS = 1e-12

# Absolute tolerance for comparing derived floats.
ABS_TOL = 1e-6


def snap_scores(values) -> np.ndarray:
    """Round to the ranking grid; also folds -0.0 into 0.0"""
    return np.round(np.asarray(values, dtype=np.float64), SCORE_DECIMALS) + 0.0


def round_half_away(value: float) -> int:
    """Round half away from zero (Python's round() is half-to-even)"""
    if value >= 0:
        return int(np.floor(value + 0.5))
    return -int(np.floor(-value + 0.5))
