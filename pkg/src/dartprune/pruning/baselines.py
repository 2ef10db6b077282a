"""
Reference strategies: random retention, importance retention, and the
recalibration-bias diagnostic for static importance scores
"""
import dataclasses
import itertools
import math
from typing import Sequence

import numpy as np

from dartprune.errors import BadParams, BudgetOutOfRange, NonFinite
from dartprune.logging_config import get_logger
from dartprune.metrics import record_retention, track_prune
from dartprune.models.reports import BiasEstimate
from dartprune.models.results import PivotSet, RetentionResult
from dartprune.models.tokens import AttentionMap, validate_attention
from dartprune.pruning.ranking import take_highest
from dartprune.resource_limits import ResourceValidator
from dartprune.rng import Xoshiro256StarStar
from dartprune.utils.numerics import snap_scores

logger = get_logger(__name__)


def _check_budget(n: int, budget: int):
    if not 1 <= budget <= n:
        raise BudgetOutOfRange(f"Budget {budget} outside [1, {n}]", budget=budget, n=n)


def random_prune(n: int, budget: int, seed: int = 0) -> RetentionResult:
    """
    Keep ``budget`` tokens drawn uniformly without replacement

    Scores are all zero; tau and eps_eff are 0, eps_eff becoming +inf when
    nothing is pruned.
    """
    _check_budget(n, budget)
    with track_prune("random"):
        retained = Xoshiro256StarStar(seed).sample(n, budget)
    record_retention(budget, n - budget)

    return RetentionResult(
        retained=np.asarray(retained, dtype=np.int64),
        pivots=PivotSet.empty(),
        agg_dup=np.zeros(n),
        cut_threshold=0.0,
        effective_epsilon=0.0 if budget < n else math.inf,
        budget=budget,
        n=n,
        method="random",
        aggregator=None,
    )


def importance_prune(scores: Sequence[float], budget: int) -> RetentionResult:
    """
    Keep the ``budget`` highest-scoring tokens, ties to the lower index

    tau is the smallest retained score; eps_eff the largest pruned score
    (-inf when nothing is pruned).
    """
    values = np.asarray(scores, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise BadParams("importance scores must be a non-empty vector")
    finite = np.isfinite(values)
    if not finite.all():
        raise NonFinite(int(np.argmin(finite)), "Non-finite importance score")
    n = values.size
    _check_budget(n, budget)

    with track_prune("importance"):
        snapped = snap_scores(values)
        retained = take_highest(snapped, budget)
        pruned = np.setdiff1d(np.arange(n), retained)
    record_retention(budget, n - budget)

    return RetentionResult(
        retained=retained,
        pivots=PivotSet.empty(),
        agg_dup=snapped,
        cut_threshold=float(snapped[retained].min()),
        effective_epsilon=float(snapped[pruned].max()) if pruned.size else -math.inf,
        budget=budget,
        n=n,
        method="importance",
        aggregator=None,
    )


def over_pool(result: RetentionResult, pool: Sequence[int], n: int) -> RetentionResult:
    """
    Lift a baseline run over the prunable pool back to all n tokens

    ``result`` indexes into ``pool``; tokens outside the pool are kept, the
    way duplication-aware retention keeps exempt text tokens. Their scores
    are NaN.
    """
    pool = np.asarray(pool, dtype=np.int64)
    if pool.size != result.n:
        raise BadParams(f"result covers {result.n} tokens, pool has {pool.size}")
    if pool.size == n:
        return result

    exempt = np.setdiff1d(np.arange(n), pool)
    scores = np.full(n, np.nan)
    scores[pool] = result.agg_dup
    return dataclasses.replace(
        result,
        retained=np.union1d(pool[result.retained], exempt),
        agg_dup=scores,
        n=n,
    )


def subset_scores(weights: np.ndarray, subset: Sequence[int]) -> np.ndarray:
    """
    Column-mean scores of the attention map restricted to ``subset``

    Rows are renormalized over the surviving columns; a row with no mass
    left spreads uniformly.
    """
    idx = np.asarray(subset, dtype=np.int64)
    sub = weights[np.ix_(idx, idx)]
    mass = sub.sum(axis=1, keepdims=True)
    uniform = np.full_like(sub, 1.0 / idx.size)
    renorm = np.divide(sub, mass, out=uniform, where=mass > 0)
    return renorm.mean(axis=0)


def subset_drift(weights: np.ndarray, base: np.ndarray, subset: Sequence[int]) -> float:
    """Total score drift of the tokens in ``subset`` once the rest is removed"""
    idx = np.asarray(subset, dtype=np.int64)
    return float((subset_scores(weights, idx) - base[idx]).sum())


def recalibration_bias(
    attn: AttentionMap,
    budget: int,
    samples: int = 1000,
    seed: int = 0,
    exhaustive: bool = False,
) -> BiasEstimate:
    """
    Expected drift of static importance scores after pruning

    Averages, over retained subsets of size ``budget``, how far the column
    mean scores of the restricted and renormalized map move from the scores
    on the full map. Monte-Carlo draws subset s from ``fork(s)`` of a
    generator seeded with ``seed``; ``exhaustive`` enumerates every subset
    instead (small maps only) and reports a zero standard error.

    Raises:
        NotRowStochastic: invalid map
        BudgetOutOfRange: budget outside [1, n]
        BadParams: samples < 1
        TooLarge: exhaustive enumeration over too many tokens
    """
    validate_attention(attn)
    weights = attn.weights.astype(np.float64)
    n = weights.shape[0]
    _check_budget(n, budget)
    base = weights.mean(axis=0)

    if exhaustive:
        ResourceValidator.validate_exhaustive_size(n)
        drifts = np.array([subset_drift(weights, base, s) for s in itertools.combinations(range(n), budget)])
        estimate = BiasEstimate(
            mean=float(drifts.mean()),
            stderr=0.0,
            samples=int(drifts.size),
            budget=budget,
            n=n,
            exhaustive=True,
        )
    else:
        if samples < 1:
            raise BadParams(f"samples must be at least 1, got {samples}")
        drifts = np.empty(samples)
        parent = Xoshiro256StarStar(seed)
        for s in range(samples):
            subset = sorted(parent.fork(s).sample(n, budget))
            drifts[s] = subset_drift(weights, base, subset)
        stderr = float(drifts.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        estimate = BiasEstimate(
            mean=float(drifts.mean()),
            stderr=stderr,
            samples=samples,
            budget=budget,
            n=n,
            exhaustive=False,
        )

    logger.info("recalibration_bias", mean=estimate.mean, stderr=estimate.stderr, samples=estimate.samples)
    return estimate
