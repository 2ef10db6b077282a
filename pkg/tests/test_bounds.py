import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dartprune.analysis import BoundMode, LipschitzModel, hausdorff, lipschitz_eval, output_drift, set_hausdorff, verify_bounds
from dartprune.errors import BadParams, EmptyRetention, EmptySet, NotNormalized, WrongAggregator
from dartprune.models import PivotSet, PivotStrategy, ReductionConfig, TokenMatrix
from dartprune.pruning import dart_prune, dup_scores, random_prune, retain


def _cfg(strategy="random", k=2, **kwargs) -> ReductionConfig:
    return ReductionConfig(pivot_count=k, pivot_strategy=PivotStrategy.parse(strategy), **kwargs)


def _sphere(rng, n, d) -> TokenMatrix:
    x = rng.normal(size=(n, d))
    return TokenMatrix(x / np.linalg.norm(x, axis=1, keepdims=True))


def _counterexample() -> TokenMatrix:
    return TokenMatrix([[1.0, 0.0], [0.01, 0.0], [0.999 * 0.9, 0.999 * math.sqrt(0.19)]])


def test_hausdorff_examples():
    tokens = TokenMatrix([[0.0, 0.0], [3.0, 0.0], [0.0, 4.0]])
    assert hausdorff(tokens, [0, 1, 2]) == 0.0
    assert hausdorff(tokens, [0]) == pytest.approx(4.0)
    assert hausdorff(TokenMatrix([[0.0, 0.0], [1.0, 0.0]]), [0]) == pytest.approx(1.0)
    assert hausdorff(TokenMatrix([[0.0, 0.0], [3.0, 4.0]]), [0]) == pytest.approx(5.0)


def test_hausdorff_needs_retained_tokens():
    with pytest.raises(EmptyRetention):
        hausdorff(TokenMatrix([[1.0, 0.0]]), [])


def test_set_hausdorff_is_symmetric():
    a = [[0.0, 0.0], [1.0, 0.0]]
    b = [[0.0, 0.0], [5.0, 0.0], [0.0, 2.0]]
    assert set_hausdorff(a, b) == set_hausdorff(b, a) == pytest.approx(4.0)
    with pytest.raises(EmptySet):
        set_hausdorff(a, np.zeros((0, 2)))


def test_lipschitz_eval_examples():
    identity = LipschitzModel.from_matrix(np.eye(2))
    np.testing.assert_allclose(lipschitz_eval(identity, [[1.0, 0.0], [0.0, 1.0]]), [1.0, 1.0])
    model = LipschitzModel.from_matrix([[1.0, 2.0], [0.0, -1.0], [3.0, 0.5]])
    np.testing.assert_allclose(lipschitz_eval(model, [[2.0, -1.0]]), model.A @ np.array([2.0, -1.0]))


def test_lipschitz_eval_errors():
    model = LipschitzModel.from_matrix(np.eye(3))
    with pytest.raises(EmptySet):
        lipschitz_eval(model, np.zeros((0, 3)))
    with pytest.raises(BadParams):
        lipschitz_eval(model, [[1.0, 2.0]])
    with pytest.raises(BadParams):
        LipschitzModel.from_matrix([[np.inf]])
    with pytest.raises(BadParams):
        LipschitzModel.random(0)


def test_certified_constant():
    model = LipschitzModel.from_matrix([[1.0, -2.0], [0.0, 3.0]])
    assert model.certified_K == pytest.approx(math.sqrt(9.0 + 9.0))


def test_random_model_is_seeded():
    a = LipschitzModel.random(16, d_out=4, seed=2)
    assert a.A.shape == (4, 16)
    np.testing.assert_array_equal(a.A, LipschitzModel.random(16, d_out=4, seed=2).A)


def _lipschitz_trial(rng):
    d = int(rng.integers(1, 9))
    model = LipschitzModel.random(d, d_out=int(rng.integers(1, 6)), seed=int(rng.integers(0, 2**32)))
    big = rng.normal(size=(int(rng.integers(2, 20)), d)) * rng.uniform(0.1, 10.0)
    small = big[: int(rng.integers(1, big.shape[0] + 1))]
    drift = np.linalg.norm(lipschitz_eval(model, big) - lipschitz_eval(model, small))
    return drift, model.certified_K * set_hausdorff(big, small)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32))
def test_lipschitz_property(seed):
    drift, bound = _lipschitz_trial(np.random.default_rng(seed))
    assert drift <= bound + 1e-9


@pytest.mark.slow
def test_lipschitz_property_many_trials():
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        drift, bound = _lipschitz_trial(rng)
        assert drift <= bound + 1e-9


def test_parallel_duplicates_have_zero_bound():
    tokens = TokenMatrix([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    pivots = PivotSet((0, 1))
    result = retain(tokens, pivots, dup_scores(pivots, tokens).max(axis=0), 2)
    assert result.effective_epsilon == 1.0
    report = verify_bounds(tokens, result)
    assert report.bound == 0.0
    assert report.hausdorff == 0.0
    assert report.lemma1_max_distance == 0.0
    assert report.ok


def test_nothing_pruned_passes_trivially():
    tokens = _sphere(np.random.default_rng(0), 6, 3)
    result = dart_prune(tokens, cfg=_cfg(budget=6))
    report = verify_bounds(tokens, result, LipschitzModel.random(3))
    assert report.checked == 0
    assert report.worst_margin == 0.0
    assert report.ok


def test_counterexample_breaks_the_normalized_bound():
    tokens = _counterexample()
    result = dart_prune(tokens, cfg=_cfg("embed-l2-max", 1, budget=1))
    assert result.retained_list() == [0]
    assert result.effective_epsilon == pytest.approx(0.9, abs=1e-6)

    with pytest.raises(NotNormalized):
        verify_bounds(tokens, result)

    loose = verify_bounds(tokens, result, mode=BoundMode.NORMALIZED, strict=False)
    assert loose.bound == pytest.approx(math.sqrt(0.2), abs=1e-5)
    assert loose.lemma1_max_distance == pytest.approx(0.99, abs=1e-6)
    assert not loose.lemma1_ok
    assert not loose.equal_norms

    general = verify_bounds(tokens, result, LipschitzModel.random(2), mode=BoundMode.GENERAL)
    assert general.lemma1_ok and general.lemma2_ok and general.theorem1_ok
    assert general.ok


def test_bounds_need_max_aggregation():
    tokens = _sphere(np.random.default_rng(3), 10, 4)
    with pytest.raises(WrongAggregator):
        verify_bounds(tokens, dart_prune(tokens, cfg=_cfg(budget=5, aggregator="mean")))
    with pytest.raises(WrongAggregator):
        verify_bounds(tokens, random_prune(10, 5, seed=1))


def _general_trial(rng, variant: str):
    n = int(rng.integers(2, 40))
    d = int(rng.integers(1, 8))
    scale = rng.uniform(0.1, 5.0, size=(n, 1)) if rng.random() < 0.8 else 1.0
    data = rng.normal(size=(n, d)) * scale
    if rng.random() < 0.2:
        data[rng.integers(0, n)] = 0.0
    tokens = TokenMatrix(data)
    k = int(rng.integers(1, min(4, n) + 1))
    budget = int(rng.integers(k, n + 1))
    cfg = _cfg(
        "random",
        k,
        budget=budget,
        seed=int(rng.integers(0, 2**32)),
        per_pivot=variant == "per_pivot",
        progressive=variant == "progressive",
    )
    result = dart_prune(tokens, cfg=cfg)
    model = LipschitzModel.random(d, d_out=4, seed=int(rng.integers(0, 1000)))
    return verify_bounds(tokens, result, model, mode=BoundMode.GENERAL)


def _normalized_trial(rng, variant: str, max_n: int):
    n = int(rng.integers(2, max_n + 1))
    d = int(rng.integers(2, 16))
    tokens = _sphere(rng, n, d)
    k = int(rng.integers(1, min(8, n) + 1))
    cfg = _cfg(
        "random",
        k,
        budget=int(rng.integers(k, n + 1)),
        seed=int(rng.integers(0, 2**32)),
        per_pivot=variant == "per_pivot",
        progressive=variant == "progressive",
    )
    result = dart_prune(tokens, cfg=cfg)
    return verify_bounds(tokens, result, LipschitzModel.random(d, seed=n), mode=BoundMode.NORMALIZED)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), variant=st.sampled_from(["one_shot", "per_pivot", "progressive"]))
def test_general_mode_never_violated(seed, variant):
    report = _general_trial(np.random.default_rng(seed), variant)
    assert report.ok, report


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**32), variant=st.sampled_from(["one_shot", "per_pivot", "progressive"]))
def test_normalized_mode_holds_on_the_sphere(seed, variant):
    report = _normalized_trial(np.random.default_rng(seed), variant, max_n=48)
    assert report.equal_norms
    assert report.ok, report


@pytest.mark.slow
def test_general_mode_many_instances():
    rng = np.random.default_rng(7)
    variants = ["one_shot", "per_pivot", "progressive"]
    for trial in range(10_000):
        report = _general_trial(rng, variants[trial % 3])
        assert report.ok, report


@pytest.mark.slow
def test_normalized_mode_many_instances():
    rng = np.random.default_rng(11)
    variants = ["one_shot", "per_pivot", "progressive"]
    for trial in range(1_000):
        report = _normalized_trial(rng, variants[trial % 3], max_n=256)
        assert report.ok, report


def test_output_drift_matches_direct_evaluation():
    tokens = _sphere(np.random.default_rng(5), 12, 4)
    model = LipschitzModel.random(4, seed=9)
    retained = [0, 3, 7]
    x = tokens.data64
    expected = np.linalg.norm(model.A @ x.max(axis=0) - model.A @ x[retained].max(axis=0))
    assert output_drift(model, tokens, retained) == pytest.approx(expected)


def test_progressive_results_use_retained_anchors():
    tokens = _sphere(np.random.default_rng(6), 30, 5)
    result = dart_prune(tokens, cfg=_cfg(budget=8, progressive=True))
    report = verify_bounds(tokens, result)
    assert report.anchors == "retained"
    assert report.checked == 22
    assert report.ok
