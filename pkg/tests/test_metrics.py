import numpy as np
import pytest

from dartprune import metrics
from dartprune.analysis import verify_bounds
from dartprune.errors import MissingAux
from dartprune.models import PivotStrategy, ReductionConfig, TokenMatrix
from dartprune.pruning import dart_prune, random_prune


def test_prune_runs_are_counted():
    before = metrics.sample_value("dartprune_prunes_total", {"method": "random", "status": "success"})
    kept_before = metrics.sample_value("dartprune_tokens_total", {"outcome": "retained"})
    random_prune(10, 4, seed=0)
    assert metrics.sample_value("dartprune_prunes_total", {"method": "random", "status": "success"}) == before + 1
    assert metrics.sample_value("dartprune_tokens_total", {"outcome": "retained"}) == kept_before + 4


def test_failed_runs_are_counted():
    before = metrics.sample_value("dartprune_prunes_total", {"method": "dart", "status": "failure"})
    cfg = ReductionConfig(budget=2, pivot_count=1, pivot_strategy=PivotStrategy.parse("knorm-max"))
    with pytest.raises(MissingAux):
        dart_prune(TokenMatrix(np.ones((4, 2))), cfg=cfg)
    assert metrics.sample_value("dartprune_prunes_total", {"method": "dart", "status": "failure"}) == before + 1


def test_track_prune_records_duration():
    count_before = metrics.sample_value("dartprune_prune_duration_seconds_count", {"method": "unit"})
    with metrics.track_prune("unit") as tracker:
        pass
    assert tracker.duration >= 0.0
    assert metrics.sample_value("dartprune_prune_duration_seconds_count", {"method": "unit"}) == count_before + 1


def test_bound_checks_are_counted():
    tokens = TokenMatrix(np.eye(4))
    result = dart_prune(tokens, cfg=ReductionConfig(budget=2, pivot_count=1, pivot_strategy=PivotStrategy.parse("random")))
    before = metrics.sample_value("dartprune_bound_checks_total", {"check": "lemma1", "result": "ok"})
    verify_bounds(tokens, result)
    assert metrics.sample_value("dartprune_bound_checks_total", {"check": "lemma1", "result": "ok"}) == before + 1


def test_write_metrics(tmp_path):
    path = tmp_path / "dartprune.prom"
    metrics.write_metrics(str(path))
    content = path.read_text()
    assert "# TYPE dartprune_prunes_total counter" in content
    assert "dartprune_build_info" in content
