"""
Brute-force reference for dart_prune

Deliberately naive: every norm, cosine and aggregate is a scalar Python
loop, and every ranking is a full stable sort on (score, index). It shares
only the score snapping and the random generator with the vectorized path,
which is what makes equality between the two meaningful.
"""
import math
from typing import List, Optional

from dartprune.errors import BudgetOutOfRange, KExceedsN, MissingAttention, MissingAux, QuotaExceedsModality
from dartprune.models.config import Aggregator, Direction, NormOrder, PivotKind, PivotSource, ReductionConfig
from dartprune.models.results import PivotSet, RetentionResult
from dartprune.models.tokens import AttentionMap, AuxFeatures, TokenMatrix, validate
from dartprune.resource_limits import ResourceValidator
from dartprune.rng import Xoshiro256StarStar
from dartprune.utils.numerics import ZERO_NORM_EPS, round_half_away, snap_scores


def _snap(value: float) -> float:
    return float(snap_scores([value])[0])


def _rows(matrix) -> List[List[float]]:
    return [[float(v) for v in row] for row in matrix]


def _norm(row: List[float], order: NormOrder = NormOrder.L2) -> float:
    if order == NormOrder.L1:
        total = 0.0
        for v in row:
            total += abs(v)
        return total
    total = 0.0
    for v in row:
        total += v * v
    return math.sqrt(total)


def _cosine(a: List[float], b: List[float]) -> float:
    na, nb = _norm(a), _norm(b)
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        return 0.0
    dot = 0.0
    for u, v in zip(a, b):
        dot += u * v
    return min(1.0, max(-1.0, dot / (na * nb)))


def _scores(rows, tokens: TokenMatrix, cfg: ReductionConfig, aux, attn) -> List[float]:
    strategy = cfg.pivot_strategy
    if strategy.kind == PivotKind.EMBED_NORM:
        return [_norm(r, strategy.norm_order) for r in rows]
    if strategy.kind in (PivotKind.K_NORM, PivotKind.V_NORM):
        matrix = None
        if aux is not None:
            matrix = aux.keys if strategy.kind == PivotKind.K_NORM else aux.values
        if matrix is None:
            raise MissingAux(f"{strategy.label} pivots need auxiliary features")
        return [_norm(r, NormOrder.L1) for r in _rows(matrix)]
    if attn is None:
        raise MissingAttention(f"{strategy.label} pivots need an attention map")
    w = _rows(attn.weights)
    n = len(w)
    received = []
    for i in range(n):
        total = 0.0
        for j in range(n):
            total += w[j][i]
        received.append(total / n)
    return received


def _pivots(rows, tokens: TokenMatrix, cfg: ReductionConfig, aux, attn) -> PivotSet:
    n = tokens.n
    tags = [0] * n if tokens.modality is None else [int(t) for t in tokens.modality]
    if cfg.modality_quota is not None:
        pools = []
        for tag, quota in zip((0, 1), cfg.modality_quota):
            members = [i for i in range(n) if tags[i] == tag and (tokens.modality is not None or tag == 0)]
            if quota > len(members):
                raise QuotaExceedsModality(f"quota {quota} exceeds {len(members)} tokens")
            pools.append((members, quota))
    else:
        if cfg.pivot_source == PivotSource.ALL:
            members = list(range(n))
        else:
            want = 0 if cfg.pivot_source == PivotSource.VISUAL else 1
            members = [i for i in range(n) if tags[i] == want and (tokens.modality is not None or want == 0)]
        if cfg.pivot_count > len(members):
            raise KExceedsN(f"{cfg.pivot_count} pivots from {len(members)} tokens")
        pools = [(members, cfg.pivot_count)]

    chosen: List[int] = []
    if cfg.pivot_strategy.kind == PivotKind.RANDOM:
        rng = Xoshiro256StarStar(cfg.seed)
        for members, quota in pools:
            chosen += [members[j] for j in rng.sample(len(members), quota)]
        return PivotSet(indices=tuple(chosen), strategy=cfg.pivot_strategy)

    scores = [_snap(s) for s in _scores(rows, tokens, cfg, aux, attn)]
    sign = -1.0 if cfg.pivot_strategy.direction == Direction.MAX else 1.0
    for members, quota in pools:
        ordered = sorted(members, key=lambda i: (sign * scores[i], i))
        chosen += ordered[:quota]
    chosen.sort()
    return PivotSet(indices=tuple(chosen), strategy=cfg.pivot_strategy, scores=tuple(scores[i] for i in chosen))


def _lowest(candidates: List[int], score) -> List[int]:
    return sorted(candidates, key=lambda i: (score[i], i))


def brute_force_prune(
    tokens: TokenMatrix,
    aux: Optional[AuxFeatures] = None,
    attn: Optional[AttentionMap] = None,
    cfg: Optional[ReductionConfig] = None,
) -> RetentionResult:
    """
    Scalar-loop evaluation of pivot selection, duplication and retention

    Raises:
        TooLarge: more tokens than the oracle limit
        plus everything dart_prune raises for the same input
    """
    cfg = cfg or ReductionConfig(ratio=0.5)
    ResourceValidator.validate_oracle_size(tokens.n)
    validate(tokens)

    n = tokens.n
    rows = _rows(tokens.data)
    tags = None if tokens.modality is None else [int(t) for t in tokens.modality]
    if tags is not None and not cfg.prune_text:
        pool = [i for i in range(n) if tags[i] == 0]
    else:
        pool = list(range(n))

    pivots = _pivots(rows, tokens, cfg, aux, attn)
    pivot_list = list(pivots.indices)
    k_in = len([p for p in pivot_list if p in pool])
    if k_in > len(pool):
        raise KExceedsN(f"{k_in} pivots exceed {len(pool)} tokens")
    if cfg.ratio is not None:
        budget = min(max(round_half_away(len(pool) * (1.0 - cfg.ratio)), k_in), len(pool))
    else:
        budget = cfg.budget
        if not k_in <= budget <= len(pool):
            raise BudgetOutOfRange(f"Budget {budget} outside [{k_in}, {len(pool)}]")

    kept = [i for i in range(n) if i in pivot_list or i not in pool]
    candidates = [i for i in pool if i not in pivot_list]
    slots = budget - k_in

    if cfg.progressive:
        current = [-math.inf] * n
        for a in kept:
            for j in range(n):
                current[j] = max(current[j], _snap(_cosine(rows[a], rows[j])))
        remaining = list(candidates)
        picks, pick_scores = [], []
        for _ in range(slots):
            j = _lowest(remaining, current)[0]
            picks.append(j)
            pick_scores.append(current[j])
            remaining.remove(j)
            for t in range(n):
                current[t] = max(current[t], _snap(_cosine(rows[j], rows[t])))
        agg = list(current)
        for j, s in zip(picks, pick_scores):
            agg[j] = s
        return RetentionResult(
            retained=kept + picks,
            pivots=pivots,
            agg_dup=agg,
            cut_threshold=max(pick_scores) if pick_scores else -math.inf,
            effective_epsilon=min(current[j] for j in remaining) if remaining else math.inf,
            budget=budget,
            n=n,
            aggregator=Aggregator.MAX,
            progressive=True,
        )

    raw = [[_cosine(rows[p], rows[j]) for j in range(n)] for p in pivot_list]
    if cfg.per_pivot:
        dup = [[_snap(v) for v in row] for row in raw]
        agg = [max(dup[r][j] for r in range(len(pivot_list))) for j in range(n)]
        removals = len(candidates) - slots
        remaining = list(candidates)
        epsilons = []
        for r in range(len(pivot_list)):
            share = removals // len(pivot_list) + (1 if r < removals % len(pivot_list) else 0)
            removed = sorted(remaining, key=lambda j: (-dup[r][j], j))[:share]
            epsilons.append(min(dup[r][j] for j in removed) if removed else math.inf)
            remaining = [j for j in remaining if j not in removed]
        pruned = [j for j in candidates if j not in remaining]
        return RetentionResult(
            retained=kept + remaining,
            pivots=pivots,
            agg_dup=agg,
            cut_threshold=max(agg[j] for j in remaining) if remaining else -math.inf,
            effective_epsilon=min(epsilons) if pruned else math.inf,
            budget=budget,
            n=n,
            aggregator=Aggregator.MAX,
            pivot_epsilons=tuple(epsilons),
        )

    agg = []
    for j in range(n):
        column = [raw[r][j] for r in range(len(pivot_list))]
        if cfg.aggregator == Aggregator.MAX:
            agg.append(max(column))
        elif cfg.aggregator == Aggregator.MIN:
            agg.append(min(column))
        else:
            agg.append(sum(column) / len(column))
    agg = [_snap(a) for a in agg]

    ordered = _lowest(candidates, agg)
    selected, pruned = ordered[:slots], ordered[slots:]
    return RetentionResult(
        retained=kept + selected,
        pivots=pivots,
        agg_dup=agg,
        cut_threshold=max(agg[j] for j in selected) if selected else -math.inf,
        effective_epsilon=min(agg[j] for j in pruned) if pruned else math.inf,
        budget=budget,
        n=n,
        aggregator=cfg.aggregator,
    )
