"""Retained-set diagnostics: overlap between strategies, spatial position bias, cluster coverage"""
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from scipy import stats

from dartprune.errors import BadParams, EmptyRetention, GridMismatch
from dartprune.models.reports import OverlapStats, PositionStats
from dartprune.models.results import RetentionResult
from dartprune.models.tokens import Modality

GRID_BUCKETS = 3

IndexSource = Union[RetentionResult, Iterable[int]]


def _indices(source: IndexSource) -> np.ndarray:
    if isinstance(source, RetentionResult):
        return source.retained
    return np.unique(np.asarray(list(source), dtype=np.int64))


def overlap_stats(a: IndexSource, b: IndexSource) -> OverlapStats:
    """Jaccard index and overlap coefficient of two retained sets"""
    if isinstance(a, RetentionResult) and isinstance(b, RetentionResult) and a.n != b.n:
        raise BadParams(f"Results cover different token counts ({a.n} vs {b.n})")
    set_a, set_b = _indices(a), _indices(b)
    inter = int(np.intersect1d(set_a, set_b).size)
    union = int(np.union1d(set_a, set_b).size)
    smaller = min(set_a.size, set_b.size)
    return OverlapStats(
        jaccard=inter / union if union else 1.0,
        min_overlap=inter / smaller if smaller else float(union == 0),
        intersection=inter,
        a_size=int(set_a.size),
        b_size=int(set_b.size),
    )


def grid_counts(positions: np.ndarray, grid: Tuple[int, int], buckets: int = GRID_BUCKETS) -> np.ndarray:
    """Bucket raster positions into a buckets x buckets histogram"""
    rows, cols = grid
    r, c = np.divmod(np.asarray(positions, dtype=np.int64), cols)
    counts = np.zeros((buckets, buckets), dtype=np.int64)
    np.add.at(counts, (r * buckets // rows, c * buckets // cols), 1)
    return counts


def position_stats(
    result: IndexSource,
    n: int,
    grid: Optional[Tuple[int, int]] = None,
    modality: Optional[np.ndarray] = None,
) -> PositionStats:
    """
    Where in the sequence, and on the image grid, retained tokens sit

    mean_norm_index is the mean of index / (n - 1), 0.5 for a single token.
    With a grid, retained visual tokens are mapped to raster positions and
    bucketed 3 x 3; the chi-square statistic compares bucket counts with
    the counts expected if retention ignored position.

    Raises:
        EmptyRetention: nothing retained
        BadParams: an index outside [0, n)
        GridMismatch: grid does not cover the visual tokens
    """
    idx = _indices(result)
    if idx.size == 0:
        raise EmptyRetention("Position statistics need a non-empty retained set")
    if idx.min() < 0 or idx.max() >= n:
        raise BadParams(f"Retained indices must lie in [0, {n})")

    mean_norm_index = 0.5 if n == 1 else float((idx / (n - 1)).mean())
    if grid is None:
        return PositionStats(mean_norm_index=mean_norm_index)

    rows, cols = int(grid[0]), int(grid[1])
    visual = np.arange(n) if modality is None else np.flatnonzero(np.asarray(modality) == int(Modality.VISUAL))
    if rows < 1 or cols < 1 or rows * cols != visual.size:
        raise GridMismatch(
            f"Grid {rows}x{cols} does not cover {visual.size} visual tokens",
            rows=rows,
            cols=cols,
            visual=int(visual.size),
        )

    positions = np.searchsorted(visual, np.intersect1d(idx, visual))
    observed = grid_counts(positions, (rows, cols))
    cells = grid_counts(np.arange(rows * cols), (rows, cols))

    occupied = cells.ravel() > 0
    f_obs = observed.ravel()[occupied].astype(np.float64)
    f_exp = cells.ravel()[occupied] * (f_obs.sum() / (rows * cols))
    if f_obs.sum() == 0 or f_obs.size < 2:
        chi2, p_value = 0.0, 1.0
    else:
        test = stats.chisquare(f_obs, f_exp)
        chi2, p_value = float(test.statistic), float(test.pvalue)

    return PositionStats(
        mean_norm_index=mean_norm_index,
        grid_chi2=chi2,
        grid_p_value=p_value,
        grid_counts=observed.tolist(),
    )


def cluster_coverage(retained: IndexSource, labels) -> float:
    """Fraction of clusters with at least one retained token"""
    labels = np.asarray(labels)
    idx = _indices(retained)
    return len(np.unique(labels[idx])) / len(np.unique(labels))


def per_cluster_counts(retained: IndexSource, labels) -> np.ndarray:
    """Retained tokens per cluster label 0..c-1"""
    labels = np.asarray(labels, dtype=np.int64)
    return np.bincount(labels[_indices(retained)], minlength=int(labels.max()) + 1)
