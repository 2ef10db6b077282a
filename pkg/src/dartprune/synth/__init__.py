from .generators import gen_clustered, gen_oversmoothed, cluster_labels, mean_pairwise_cosine
from .oracle import brute_force_prune

__all__ = ['gen_clustered', 'gen_oversmoothed', 'cluster_labels', 'mean_pairwise_cosine', 'brute_force_prune']
