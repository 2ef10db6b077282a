"""
Pivot token selection

Pivots are the k representative tokens every other token is scored against.
They are picked at random or by a per-token score (embedding norm, key or
value L1 norm, attention received), optionally split across modalities.
"""
from typing import List, Optional, Union

import numpy as np

from dartprune.errors import KExceedsN, MissingAttention, MissingAux, QuotaExceedsModality
from dartprune.logging_config import get_logger
from dartprune.models.config import Direction, NormOrder, PivotKind, PivotSource, PivotStrategy, ReductionConfig
from dartprune.models.results import PivotSet
from dartprune.models.tokens import (
    AttentionMap,
    AuxFeatures,
    Modality,
    TokenMatrix,
    validate_attention,
    validate_aux,
)
from dartprune.pruning.ranking import take_highest, take_lowest
from dartprune.rng import Xoshiro256StarStar
from dartprune.utils.numerics import snap_scores

logger = get_logger(__name__)


def row_norms(matrix, order: Union[NormOrder, str] = NormOrder.L2) -> np.ndarray:
    """Per-row L1 or L2 norm, accumulated in float64"""
    m = np.asarray(matrix)
    if m.dtype not in (np.float32, np.float64):
        m = m.astype(np.float64)
    if NormOrder(order) == NormOrder.L1:
        return np.abs(m).sum(axis=1, dtype=np.float64)
    return np.sqrt(np.einsum("ij,ij->i", m, m, dtype=np.float64))


def attention_received(attn: AttentionMap) -> np.ndarray:
    """
    Mean attention each token receives: the column means of the map

    Raises:
        NotRowStochastic: if the map fails validation
    """
    validate_attention(attn)
    return attn.weights.astype(np.float64).mean(axis=0)


def strategy_scores(
    tokens: TokenMatrix,
    strategy: PivotStrategy,
    aux: Optional[AuxFeatures] = None,
    attn: Optional[AttentionMap] = None,
) -> np.ndarray:
    """Selection score of every token under a score-based strategy"""
    if strategy.kind == PivotKind.EMBED_NORM:
        if strategy.norm_order == NormOrder.L2:
            return tokens.norms
        return row_norms(tokens.data, NormOrder.L1)

    if strategy.kind in (PivotKind.K_NORM, PivotKind.V_NORM):
        name = "keys" if strategy.kind == PivotKind.K_NORM else "values"
        if aux is None or getattr(aux, name) is None:
            raise MissingAux(f"{strategy.label} pivots need {name}", strategy=strategy.label)
        validate_aux(aux, tokens.n)
        return aux.key_l1 if name == "keys" else aux.value_l1

    if strategy.kind == PivotKind.ATTN_SCORE:
        if attn is None:
            raise MissingAttention(f"{strategy.label} pivots need an attention map", strategy=strategy.label)
        validate_attention(attn, tokens.n)
        return attention_received(attn)

    raise ValueError(f"strategy {strategy.label} has no scores")


def _candidate_pools(tokens: TokenMatrix, cfg: ReductionConfig) -> List[tuple]:
    """(candidate indices, pivot count) per independent selection pass"""
    if cfg.modality_quota is not None:
        visual_k, text_k = cfg.modality_quota
        pools = []
        for modality, quota in ((Modality.VISUAL, visual_k), (Modality.TEXT, text_k)):
            candidates = tokens.indices_of(modality)
            if quota > candidates.size:
                raise QuotaExceedsModality(
                    f"Quota of {quota} {modality.name.lower()} pivots exceeds {candidates.size} such tokens",
                    modality=modality.name.lower(),
                    quota=quota,
                    available=int(candidates.size),
                )
            pools.append((candidates, quota))
        return pools

    if cfg.pivot_source == PivotSource.VISUAL:
        candidates = tokens.indices_of(Modality.VISUAL)
    elif cfg.pivot_source == PivotSource.TEXT:
        candidates = tokens.indices_of(Modality.TEXT)
    else:
        candidates = np.arange(tokens.n, dtype=np.int64)

    if cfg.pivot_count > candidates.size:
        raise KExceedsN(
            f"{cfg.pivot_count} pivots requested from {candidates.size} candidate tokens",
            k=cfg.pivot_count,
            n=int(candidates.size),
        )
    return [(candidates, cfg.pivot_count)]


def select_pivots(
    tokens: TokenMatrix,
    aux: Optional[AuxFeatures] = None,
    attn: Optional[AttentionMap] = None,
    cfg: Optional[ReductionConfig] = None,
) -> PivotSet:
    """
    Pick pivot tokens under the configured strategy

    Score-based strategies take the top-k (Max) or bottom-k (Min) by score,
    ties to the lower index. Random draws k distinct candidates from the
    seeded generator. With a modality quota each modality is selected on its
    own (visual first, sharing one random stream) and the results merged.

    Raises:
        MissingAux, MissingAttention: the strategy lacks its input
        QuotaExceedsModality: a quota exceeds its modality's token count
        KExceedsN: more pivots than candidate tokens
    """
    cfg = cfg or ReductionConfig(ratio=0.5)
    strategy = cfg.pivot_strategy
    pools = _candidate_pools(tokens, cfg)

    chosen: List[int] = []
    if strategy.kind == PivotKind.RANDOM:
        rng = Xoshiro256StarStar(cfg.seed)
        for candidates, quota in pools:
            chosen.extend(int(candidates[j]) for j in rng.sample(int(candidates.size), quota))
        pivots = PivotSet(indices=tuple(chosen), strategy=strategy)
    else:
        scores = snap_scores(strategy_scores(tokens, strategy, aux, attn))
        pick = take_highest if strategy.direction == Direction.MAX else take_lowest
        for candidates, quota in pools:
            chosen.extend(int(i) for i in pick(scores, quota, candidates))
        ordered = sorted(chosen)
        pivots = PivotSet(indices=tuple(ordered), strategy=strategy, scores=tuple(scores[ordered]))

    logger.debug("pivots_selected", strategy=strategy.label, k=pivots.k, indices=list(pivots.indices))
    return pivots
