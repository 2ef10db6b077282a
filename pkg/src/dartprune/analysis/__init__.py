from .flops import total_flops, post_prune_flops, flops_reduction_ratio, kv_cache_elements, flops_summary
from .bounds import (
    BoundMode,
    LipschitzModel,
    hausdorff,
    set_hausdorff,
    lipschitz_eval,
    output_drift,
    verify_bounds,
)
from .stats import overlap_stats, position_stats, cluster_coverage, per_cluster_counts

__all__ = [
    'total_flops', 'post_prune_flops', 'flops_reduction_ratio', 'kv_cache_elements', 'flops_summary',
    'BoundMode', 'LipschitzModel', 'hausdorff', 'set_hausdorff', 'lipschitz_eval', 'output_drift',
    'verify_bounds',
    'overlap_stats', 'position_stats', 'cluster_coverage', 'per_cluster_counts',
]
