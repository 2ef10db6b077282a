"""
The shared top-k kernel

Both duplication-based retention and importance-based retention pick tokens
through these two functions, so ties are broken the same way everywhere:
scores are snapped to the ranking grid, then equal scores go to the lower
token index first.
"""
from typing import Optional

import numpy as np

from dartprune.utils.numerics import snap_scores


def _candidates(n: int, candidates: Optional[np.ndarray]) -> np.ndarray:
    if candidates is None:
        return np.arange(n, dtype=np.int64)
    return np.asarray(candidates, dtype=np.int64)


def rank_ascending(scores, candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """Candidate indices ordered by snapped score ascending, then by index"""
    snapped = snap_scores(scores)
    idx = _candidates(snapped.size, candidates)
    return idx[np.lexsort((idx, snapped[idx]))]


def rank_descending(scores, candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """Candidate indices ordered by snapped score descending, then by index"""
    snapped = snap_scores(scores)
    idx = _candidates(snapped.size, candidates)
    return idx[np.lexsort((idx, -snapped[idx]))]


def take_lowest(scores, m: int, candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """The m lowest-scoring candidates, sorted by index"""
    return np.sort(rank_ascending(scores, candidates)[:m])


def take_highest(scores, m: int, candidates: Optional[np.ndarray] = None) -> np.ndarray:
    """The m highest-scoring candidates, sorted by index"""
    return np.sort(rank_descending(scores, candidates)[:m])
