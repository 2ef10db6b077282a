from .pivot import row_norms, attention_received, select_pivots
from .dedup import (
    dup_scores,
    aggregate_dup,
    retain,
    retain_per_pivot,
    retain_progressive,
    dart_prune,
)
from .baselines import random_prune, importance_prune, recalibration_bias

__all__ = [
    'row_norms', 'attention_received', 'select_pivots',
    'dup_scores', 'aggregate_dup', 'retain', 'retain_per_pivot', 'retain_progressive', 'dart_prune',
    'random_prune', 'importance_prune', 'recalibration_bias',
]
