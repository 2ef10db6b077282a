"""
Duplication scoring and budgeted retention

A token x is an eps-duplicate of pivot p when cos(p, x) >= eps. Tokens are
scored against every pivot, the scores aggregated per token, and the budget
is filled with the least duplicated tokens. The threshold eps is never given
directly: it is whatever the budget cut implies, reported as
``effective_epsilon``.

Three retention schemes share the scoring:

- one global cut on aggregated scores (default)
- per-pivot shares: each pivot removes an equal share of its own duplicates
- progressive: every kept token joins the anchor set before the next pick
"""
from typing import List, Optional, Tuple

import numpy as np

from dartprune.errors import BadParams, BudgetOutOfRange
from dartprune.logging_config import get_logger
from dartprune.metrics import record_retention, track_prune
from dartprune.models.config import Aggregator, ReductionConfig
from dartprune.models.results import PivotSet, RetentionResult
from dartprune.models.tokens import AttentionMap, AuxFeatures, Modality, TokenMatrix, validate
from dartprune.pruning.pivot import select_pivots
from dartprune.pruning.ranking import rank_ascending, take_highest, take_lowest
from dartprune.utils.numerics import ZERO_NORM_EPS, snap_scores

logger = get_logger(__name__)


# Tokens cast to float64 per block when no float64 copy of the matrix exists
CAST_BLOCK_ROWS = 256


def _row_dots(tokens: TokenMatrix, rows: np.ndarray) -> np.ndarray:
    """float64 dot products of the selected rows with every token"""
    if "data64" in vars(tokens):
        x = tokens.data64
        return x[rows] @ x.T

    data = tokens.data
    picked = data[rows].astype(np.float64)
    dots = np.empty((rows.size, tokens.n))
    block = np.empty((min(CAST_BLOCK_ROWS, tokens.n), tokens.d))
    for start in range(0, tokens.n, CAST_BLOCK_ROWS):
        stop = min(start + CAST_BLOCK_ROWS, tokens.n)
        chunk = block[: stop - start]
        np.copyto(chunk, data[start:stop])
        dots[:, start:stop] = picked @ chunk.T
    return dots


def cosine_rows(tokens: TokenMatrix, rows) -> np.ndarray:
    """Cosine of each selected row against every token; 0 against zero-norm rows"""
    rows = np.asarray(rows, dtype=np.int64)
    norms = tokens.norms
    dots = _row_dots(tokens, rows)
    denom = np.outer(norms[rows], norms)
    valid = (norms[rows][:, None] >= ZERO_NORM_EPS) & (norms[None, :] >= ZERO_NORM_EPS)
    cos = np.zeros_like(dots)
    np.divide(dots, denom, out=cos, where=valid)
    return np.clip(cos, -1.0, 1.0)


def dup_scores(pivots: PivotSet, tokens: TokenMatrix) -> np.ndarray:
    """k x n duplication matrix: entry (i, j) = cos(p_i, x_j)"""
    return cosine_rows(tokens, pivots.as_array())


def aggregate_dup(dup: np.ndarray, aggregator: Aggregator = Aggregator.MAX) -> np.ndarray:
    """Per-token column reduction of the duplication matrix"""
    dup = np.asarray(dup, dtype=np.float64)
    if dup.ndim != 2 or dup.shape[0] == 0:
        raise BadParams("aggregation needs at least one pivot row")
    aggregator = Aggregator(aggregator)
    if aggregator == Aggregator.MAX:
        return dup.max(axis=0)
    if aggregator == Aggregator.MIN:
        return dup.min(axis=0)
    return dup.mean(axis=0)


def prunable_indices(tokens: TokenMatrix, prune_text: bool = False) -> np.ndarray:
    """Tokens the budget applies to; tagged text tokens are exempt unless prune_text"""
    if tokens.has_modality and not prune_text:
        return tokens.indices_of(Modality.VISUAL)
    return np.arange(tokens.n, dtype=np.int64)


def _split(tokens: TokenMatrix, pivots: PivotSet, budget: int, prunable: Optional[np.ndarray]):
    """Always-kept tokens, prunable candidates and the number of free slots"""
    n = tokens.n
    if prunable is None:
        prunable = np.arange(n, dtype=np.int64)
    in_pool = np.zeros(n, dtype=bool)
    in_pool[prunable] = True
    is_pivot = np.zeros(n, dtype=bool)
    is_pivot[pivots.as_array()] = True

    k_in = int((in_pool & is_pivot).sum())
    n_pool = int(in_pool.sum())
    if not k_in <= budget <= n_pool:
        raise BudgetOutOfRange(
            f"Budget {budget} outside [{k_in}, {n_pool}]",
            budget=budget,
            k=k_in,
            n=n_pool,
        )
    kept = np.flatnonzero(is_pivot | ~in_pool)
    candidates = np.flatnonzero(in_pool & ~is_pivot)
    return kept, candidates, budget - k_in


def _extremes(agg: np.ndarray, selected: np.ndarray, pruned: np.ndarray) -> Tuple[float, float]:
    tau = float(agg[selected].max()) if selected.size else -np.inf
    eps = float(agg[pruned].min()) if pruned.size else np.inf
    return tau, eps


def retain(
    tokens: TokenMatrix,
    pivots: PivotSet,
    agg,
    budget: int,
    prunable: Optional[np.ndarray] = None,
    aggregator: Aggregator = Aggregator.MAX,
) -> RetentionResult:
    """
    Keep the pivots plus the (budget - k) least duplicated prunable tokens

    ``prunable`` restricts the tokens the budget applies to; the rest are
    kept unconditionally. Ties go to the lower index.

    Raises:
        BudgetOutOfRange: budget outside [pivots in pool, pool size]
    """
    agg = snap_scores(agg)
    kept, candidates, slots = _split(tokens, pivots, budget, prunable)
    selected = take_lowest(agg, slots, candidates)
    retained = np.union1d(kept, selected)
    pruned = np.setdiff1d(candidates, selected)
    tau, eps = _extremes(agg, selected, pruned)

    return RetentionResult(
        retained=retained,
        pivots=pivots,
        agg_dup=agg,
        cut_threshold=tau,
        effective_epsilon=eps,
        budget=budget,
        n=tokens.n,
        aggregator=Aggregator(aggregator),
    )


def retain_per_pivot(
    tokens: TokenMatrix,
    pivots: PivotSet,
    dup: np.ndarray,
    budget: int,
    prunable: Optional[np.ndarray] = None,
) -> RetentionResult:
    """
    Each pivot removes an equal share of its most duplicated candidates

    The removal count is split evenly, earlier pivots taking the remainder.
    Pivots run in index order over the candidates still left, so a token is
    charged to the first pivot that claims it. ``pivot_epsilons`` holds the
    smallest score each pivot removed (+inf for an empty share).
    """
    if pivots.k == 0:
        raise BadParams("per-pivot retention needs at least one pivot")
    dup = snap_scores(dup)
    kept, candidates, slots = _split(tokens, pivots, budget, prunable)

    removals = candidates.size - slots
    base, extra = divmod(removals, pivots.k)
    remaining = candidates
    epsilons: List[float] = []
    for row in range(pivots.k):
        share = base + (1 if row < extra else 0)
        removed = take_highest(dup[row], share, remaining)
        epsilons.append(float(dup[row][removed].min()) if removed.size else np.inf)
        remaining = np.setdiff1d(remaining, removed)

    agg = dup.max(axis=0)
    retained = np.union1d(kept, remaining)
    pruned = np.setdiff1d(candidates, remaining)
    tau = float(agg[remaining].max()) if remaining.size else -np.inf
    eps = min(epsilons) if pruned.size else np.inf

    return RetentionResult(
        retained=retained,
        pivots=pivots,
        agg_dup=agg,
        cut_threshold=tau,
        effective_epsilon=eps,
        budget=budget,
        n=tokens.n,
        aggregator=Aggregator.MAX,
        pivot_epsilons=tuple(epsilons),
    )


def retain_progressive(
    tokens: TokenMatrix,
    pivots: PivotSet,
    budget: int,
    prunable: Optional[np.ndarray] = None,
) -> RetentionResult:
    """
    Greedy coverage: each pick is the candidate least duplicated with
    everything kept so far, and then joins the anchor set

    Reported scores: the selection-time score for picked tokens, the final
    max duplication against the kept set for everything else. The cut
    threshold is the largest selection score, so it never exceeds the
    effective epsilon.
    """
    kept, candidates, slots = _split(tokens, pivots, budget, prunable)
    tokens.data64  # one float64 copy serves every pick

    current = np.full(tokens.n, -np.inf)
    if kept.size:
        current = snap_scores(cosine_rows(tokens, kept).max(axis=0))

    remaining = candidates
    picks: List[int] = []
    pick_scores: List[float] = []
    for _ in range(slots):
        j = int(rank_ascending(current, remaining)[0])
        picks.append(j)
        pick_scores.append(float(current[j]))
        remaining = remaining[remaining != j]
        current = np.maximum(current, snap_scores(cosine_rows(tokens, [j])[0]))

    agg = current.copy()
    if picks:
        agg[picks] = pick_scores
    selected = np.asarray(picks, dtype=np.int64)
    retained = np.union1d(kept, selected)
    tau = max(pick_scores) if pick_scores else -np.inf
    eps = float(current[remaining].min()) if remaining.size else np.inf

    return RetentionResult(
        retained=retained,
        pivots=pivots,
        agg_dup=agg,
        cut_threshold=tau,
        effective_epsilon=eps,
        budget=budget,
        n=tokens.n,
        aggregator=Aggregator.MAX,
        progressive=True,
    )


def dart_prune(
    tokens: TokenMatrix,
    aux: Optional[AuxFeatures] = None,
    attn: Optional[AttentionMap] = None,
    cfg: Optional[ReductionConfig] = None,
) -> RetentionResult:
    """
    Select pivots, score duplication, and keep the budget

    The budget (or ratio) counts prunable tokens: every token unless the
    matrix carries modality tags and ``cfg.prune_text`` is off, in which
    case text tokens are kept on top of it.
    """
    cfg = cfg or ReductionConfig(ratio=0.5)
    validate(tokens)

    with track_prune("dart"):
        prunable = prunable_indices(tokens, cfg.prune_text)
        pivots = select_pivots(tokens, aux, attn, cfg)
        k_in = int(np.isin(pivots.as_array(), prunable).sum())
        budget = cfg.resolve_budget(int(prunable.size), k_in)

        if cfg.progressive:
            result = retain_progressive(tokens, pivots, budget, prunable)
        else:
            dup = dup_scores(pivots, tokens)
            if cfg.per_pivot:
                result = retain_per_pivot(tokens, pivots, dup, budget, prunable)
            else:
                agg = aggregate_dup(dup, cfg.aggregator)
                result = retain(tokens, pivots, agg, budget, prunable, cfg.aggregator)

    record_retention(int(result.retained.size), tokens.n - int(result.retained.size))
    logger.info(
        "tokens_pruned",
        n=tokens.n,
        budget=budget,
        retained=int(result.retained.size),
        tau=result.cut_threshold,
        eps_eff=result.effective_epsilon,
    )
    return result
