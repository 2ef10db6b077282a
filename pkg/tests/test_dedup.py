import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dartprune.errors import BadParams, BudgetOutOfRange, EmptyMatrix, NonFinite
from dartprune.models import Aggregator, PivotSet, PivotStrategy, ReductionConfig, TokenMatrix
from dartprune.pruning import aggregate_dup, dart_prune, dup_scores, retain, retain_per_pivot, retain_progressive
from dartprune.pruning.dedup import cosine_rows, prunable_indices
from dartprune.utils.numerics import snap_scores


def _cfg(strategy="embed-l2-max", k=1, **kwargs) -> ReductionConfig:
    return ReductionConfig(pivot_count=k, pivot_strategy=PivotStrategy.parse(strategy), **kwargs)


def _angles(*degrees) -> TokenMatrix:
    rad = np.radians(degrees)
    return TokenMatrix(np.stack([np.cos(rad), np.sin(rad)], axis=1))


def test_dup_scores_examples():
    tokens = TokenMatrix([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    dup = dup_scores(PivotSet((0, 2)), tokens)
    assert dup.shape == (2, 3)
    assert dup[0, 0] == pytest.approx(1.0)
    assert dup[0, 1] == pytest.approx(0.0)
    assert dup[1, 0] == pytest.approx(0.70710678, abs=1e-8)


def test_cosine_against_zero_rows_is_zero():
    tokens = TokenMatrix([[1.0, 0.0], [0.0, 0.0]])
    dup = cosine_rows(tokens, [0, 1])
    assert dup[0, 1] == 0.0
    assert dup[1].tolist() == [0.0, 0.0]


def test_cosine_is_clipped():
    tokens = TokenMatrix(np.full((3, 7), 0.1))
    dup = cosine_rows(tokens, [0])
    assert dup.max() <= 1.0


def test_aggregate_examples():
    dup = np.array([[0.9, 0.2], [0.1, 0.8]])
    assert aggregate_dup(dup, Aggregator.MAX).tolist() == [0.9, 0.8]
    assert aggregate_dup(dup, Aggregator.MIN).tolist() == [0.1, 0.2]
    np.testing.assert_allclose(aggregate_dup(dup, "mean"), [0.5, 0.5])


def test_aggregate_needs_a_pivot():
    with pytest.raises(BadParams):
        aggregate_dup(np.zeros((0, 4)))


def test_retain_example():
    tokens = TokenMatrix(np.ones((5, 2)))
    agg = [1.0, 0.9, 0.1, 0.5, 0.3]
    result = retain(tokens, PivotSet((0,)), agg, 3)
    assert result.retained_list() == [0, 2, 4]
    assert result.cut_threshold == 0.3
    assert result.effective_epsilon == 0.5
    assert result.pruned.tolist() == [1, 3]


def test_retain_full_budget_prunes_nothing():
    tokens = TokenMatrix(np.ones((5, 2)))
    result = retain(tokens, PivotSet((0,)), [1.0, 0.9, 0.1, 0.5, 0.3], 5)
    assert result.retained_list() == [0, 1, 2, 3, 4]
    assert result.effective_epsilon == math.inf


def test_retain_pivot_floor():
    tokens = TokenMatrix(np.ones((5, 2)))
    result = retain(tokens, PivotSet((1, 3)), [0.0] * 5, 2)
    assert result.retained_list() == [1, 3]
    assert result.cut_threshold == -math.inf


def test_retain_budget_bounds():
    tokens = TokenMatrix(np.ones((5, 2)))
    with pytest.raises(BudgetOutOfRange):
        retain(tokens, PivotSet((0, 1)), [0.0] * 5, 1)
    with pytest.raises(BudgetOutOfRange):
        retain(tokens, PivotSet((0,)), [0.0] * 5, 6)


def test_retain_with_exempt_tokens():
    tokens = TokenMatrix(np.ones((6, 2)))
    agg = [1.0, 0.2, 0.9, 0.4, 0.0, 0.0]
    result = retain(tokens, PivotSet((0,)), agg, 2, prunable=np.arange(4))
    assert result.retained_list() == [0, 1, 4, 5]
    assert result.effective_epsilon == 0.4


def test_dart_prune_rejects_bad_tokens():
    with pytest.raises(EmptyMatrix):
        dart_prune(TokenMatrix(np.zeros((0, 2))), cfg=_cfg(budget=1))
    bad = np.ones((3, 2))
    bad[2, 0] = np.inf
    with pytest.raises(NonFinite):
        dart_prune(TokenMatrix(bad), cfg=_cfg(budget=1))


def test_two_clusters_are_both_covered():
    tokens = TokenMatrix(
        [[1.0, 0.0], [0.99, 0.05], [0.98, -0.04], [0.0, 1.0], [0.03, 0.97], [-0.02, 1.01]]
    )
    result = dart_prune(tokens, cfg=_cfg(budget=3))
    kept = set(result.retained_list())
    assert kept & {0, 1, 2} and kept & {3, 4, 5}


def test_identical_tokens():
    tokens = TokenMatrix(np.tile([0.6, 0.8], (6, 1)))
    result = dart_prune(tokens, cfg=_cfg(budget=2))
    assert result.pivots.indices == (0,)
    assert result.retained_list() == [0, 1]
    assert result.agg_dup.tolist() == [1.0] * 6


def test_ratio_of_one_token_prunes_the_most_duplicated(np_rng):
    tokens = TokenMatrix(np_rng.normal(size=(10, 5)))
    result = dart_prune(tokens, cfg=_cfg("embed-l2-max", 2, ratio=0.1))
    assert result.retained.size == 9
    candidates = [i for i in range(10) if i not in result.pivots.indices]
    most = max(candidates, key=lambda i: (result.agg_dup[i], i))
    assert result.pruned.tolist() == [most]


def test_dart_prune_is_deterministic(np_rng):
    tokens = TokenMatrix(np_rng.normal(size=(50, 8)))
    cfg = _cfg("random", 4, budget=20, seed=3)
    first, second = dart_prune(tokens, cfg=cfg), dart_prune(tokens, cfg=cfg)
    assert first.retained_list() == second.retained_list()
    assert first.pivots.indices == second.pivots.indices


def test_scale_invariance(np_rng):
    data = np_rng.normal(size=(40, 6)).astype(np.float32)
    cfg = _cfg("embed-l2-max", 4, budget=15)
    base = dart_prune(TokenMatrix(data), cfg=cfg)
    scaled = dart_prune(TokenMatrix(data * 2.0), cfg=cfg)
    assert base.retained_list() == scaled.retained_list()
    assert base.effective_epsilon == scaled.effective_epsilon


def test_rescaling_one_row_keeps_dup_scores(np_rng):
    data = np_rng.normal(size=(12, 5))
    pivots = PivotSet((0, 3))
    scaled = data.copy()
    scaled[7] *= 4.0
    base = dup_scores(pivots, TokenMatrix(data))
    after = dup_scores(pivots, TokenMatrix(scaled))
    np.testing.assert_array_equal(snap_scores(base), snap_scores(after))
    agg = aggregate_dup(base)
    assert retain(TokenMatrix(data), pivots, agg, 6).retained_list() == retain(
        TokenMatrix(scaled), pivots, aggregate_dup(after), 6
    ).retained_list()


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32),
    n=st.integers(min_value=2, max_value=40),
    k=st.integers(min_value=1, max_value=4),
    aggregator=st.sampled_from(["max", "min", "mean"]),
    data=st.data(),
)
def test_budget_is_exact_and_epsilon_separates(seed, n, k, aggregator, data):
    k = min(k, n)
    budget = data.draw(st.integers(min_value=k, max_value=n))
    tokens = TokenMatrix(np.random.default_rng(seed).normal(size=(n, 3)))
    cfg = _cfg("random", k, budget=budget, seed=seed, aggregator=aggregator)
    result = dart_prune(tokens, cfg=cfg)

    assert result.retained.size == budget
    assert set(result.pivots.indices) <= set(result.retained_list())
    assert result.cut_threshold <= result.effective_epsilon
    if result.pruned.size:
        assert result.agg_dup[result.pruned].min() == result.effective_epsilon


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), n=st.integers(min_value=3, max_value=30))
def test_retention_is_monotone_in_budget(seed, n):
    tokens = TokenMatrix(np.random.default_rng(seed).normal(size=(n, 4)))
    previous = set()
    for budget in range(1, n + 1):
        kept = set(dart_prune(tokens, cfg=_cfg("embed-l1-max", 1, budget=budget)).retained_list())
        assert previous <= kept
        previous = kept


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), n=st.integers(min_value=4, max_value=30))
def test_pruned_tokens_are_epsilon_duplicates(seed, n):
    tokens = TokenMatrix(np.random.default_rng(seed).normal(size=(n, 4)))
    result = dart_prune(tokens, cfg=_cfg("random", 3, budget=3 + (n - 3) // 2, seed=seed))
    dup = snap_scores(dup_scores(result.pivots, tokens))
    for j in result.pruned:
        assert dup[:, j].max() >= result.effective_epsilon


def test_per_pivot_shares():
    tokens = TokenMatrix(np.ones((6, 2)))
    dup = np.array(
        [
            [1.0, 0.0, 0.9, 0.8, 0.1, 0.2],
            [0.0, 1.0, 0.95, 0.1, 0.7, 0.3],
        ]
    )
    result = retain_per_pivot(tokens, PivotSet((0, 1)), dup, 3)
    assert result.retained_list() == [0, 1, 5]
    assert result.pivot_epsilons == (0.8, 0.7)
    assert result.effective_epsilon == 0.7
    assert result.cut_threshold == 0.3
    assert result.agg_dup.tolist() == [1.0, 1.0, 0.95, 0.8, 0.7, 0.3]


def test_per_pivot_empty_share_is_infinite():
    tokens = TokenMatrix(np.ones((4, 2)))
    dup = np.array([[1.0, 0.0, 0.5, 0.6], [0.0, 1.0, 0.4, 0.2]])
    result = retain_per_pivot(tokens, PivotSet((0, 1)), dup, 3)
    assert result.pivot_epsilons == (0.6, math.inf)
    assert result.retained_list() == [0, 1, 2]
    assert result.effective_epsilon == 0.6


def test_per_pivot_through_dart_prune(np_rng):
    tokens = TokenMatrix(np_rng.normal(size=(30, 5)))
    result = dart_prune(tokens, cfg=_cfg("embed-l2-max", 3, budget=12, per_pivot=True))
    assert result.retained.size == 12
    assert len(result.pivot_epsilons) == 3
    assert result.effective_epsilon == min(result.pivot_epsilons)


def test_progressive_covers_directions():
    tokens = _angles(0, 10, 90, 100, 180)
    pivots = PivotSet((0,))

    progressive = retain_progressive(tokens, pivots, 3)
    assert progressive.retained_list() == [0, 2, 4]
    assert progressive.cut_threshold == 0.0
    assert progressive.effective_epsilon == pytest.approx(math.cos(math.radians(10)), abs=1e-6)
    assert progressive.anchors.tolist() == [0, 2, 4]

    one_shot = retain(tokens, pivots, dup_scores(pivots, tokens)[0], 3)
    assert one_shot.retained_list() == [0, 3, 4]
    assert one_shot.anchors.tolist() == [0]


def test_progressive_never_cuts_above_epsilon(np_rng):
    tokens = TokenMatrix(np_rng.normal(size=(40, 6)))
    result = dart_prune(tokens, cfg=_cfg("embed-l2-max", 2, budget=10, progressive=True))
    assert result.progressive
    assert result.retained.size == 10
    assert result.cut_threshold <= result.effective_epsilon


def test_text_tokens_pass_through():
    data = np.random.default_rng(4).normal(size=(8, 3))
    tokens = TokenMatrix(data, modality=[0] * 6 + [1] * 2)
    assert prunable_indices(tokens).tolist() == [0, 1, 2, 3, 4, 5]

    result = dart_prune(tokens, cfg=_cfg(budget=3))
    assert result.retained.size == 5
    assert {6, 7} <= set(result.retained_list())

    with_text = dart_prune(tokens, cfg=_cfg(budget=3, prune_text=True))
    assert with_text.retained.size == 3


def test_ratio_counts_only_visual_tokens():
    tokens = TokenMatrix(np.random.default_rng(8).normal(size=(12, 3)), modality=[0] * 9 + [1] * 3)
    result = dart_prune(tokens, cfg=_cfg(ratio=2 / 3))
    assert result.budget == 3
    assert result.retained.size == 6


def test_text_pivots_do_not_use_the_budget():
    tokens = TokenMatrix(np.random.default_rng(2).normal(size=(7, 3)), modality=[0] * 5 + [1] * 2)
    result = dart_prune(tokens, cfg=_cfg(budget=1, pivot_source="text"))
    assert result.pivots.indices[0] in (5, 6)
    assert result.retained.size == 3


def test_block_cast_matches_float64_copy(np_rng):
    data = np_rng.normal(size=(600, 24)).astype(np.float32)
    fresh = TokenMatrix(data)
    blocked = cosine_rows(fresh, [3, 511, 599])
    assert "data64" not in vars(fresh)

    warm = TokenMatrix(data)
    warm.data64
    np.testing.assert_allclose(blocked, cosine_rows(warm, [3, 511, 599]), rtol=0, atol=1e-12)
