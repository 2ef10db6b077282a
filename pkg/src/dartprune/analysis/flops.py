"""
Theoretical FLOPs of a decoder forward pass over n tokens

Per layer: 4nd^2 (QKV and output projections) + 2n^2d (attention) + 2ndm
(FFN). Tokens pruned after layer L only pay the reduced cost in the
remaining T - L layers. Everything is exact Python integer arithmetic;
realistic shapes overflow int64 in intermediate products.
"""
import math
from fractions import Fraction
from typing import Optional

from dartprune.errors import BadParams
from dartprune.logging_config import get_logger
from dartprune.models.config import ModelDims
from dartprune.models.reports import FlopsSummary

logger = get_logger(__name__)


def _layer_flops(dims: ModelDims, n: int) -> int:
    return 4 * n * dims.d**2 + 2 * n**2 * dims.d + 2 * n * dims.d * dims.m


def _check_counts(n: int, n_hat: Optional[int] = None):
    if n < 0:
        raise BadParams(f"token count must be non-negative, got {n}")
    if n_hat is not None and not 0 <= n_hat <= n:
        raise BadParams(f"retained count {n_hat} outside [0, {n}]", n=n, n_hat=n_hat)


def total_flops(dims: ModelDims, n: int) -> int:
    _check_counts(n)
    return dims.T * _layer_flops(dims, n)


def post_prune_flops(dims: ModelDims, n: int, n_hat: int) -> int:
    """Full cost for the first L layers, reduced cost for the rest"""
    _check_counts(n, n_hat)
    return dims.L * _layer_flops(dims, n) + (dims.T - dims.L) * _layer_flops(dims, n_hat)


def flops_reduction_ratio(dims: ModelDims, n: int, n_hat: int) -> float:
    """
    1 - post/total, in [0, 1)

    A degenerate full reduction (L = 0, n_hat = 0) is clamped just below 1
    with a warning; n = 0 gives 0.
    """
    total = total_flops(dims, n)
    if total == 0:
        return 0.0
    ratio = float(1 - Fraction(post_prune_flops(dims, n, n_hat), total))
    if ratio >= 1.0:
        logger.warning("flops_ratio_clamped", n=n, n_hat=n_hat, L=dims.L)
        return math.nextafter(1.0, 0.0)
    return ratio


def kv_cache_elements(dims: ModelDims, n_hat: int) -> int:
    """Keys and values kept for the layers after the prune point"""
    return 2 * n_hat * dims.d * (dims.T - dims.L)


def flops_summary(dims: ModelDims, n: int, n_hat: int, text_tokens: Optional[int] = None) -> FlopsSummary:
    total = total_flops(dims, n)
    post = post_prune_flops(dims, n, n_hat)
    return FlopsSummary(
        total=total,
        post=post,
        ratio=flops_reduction_ratio(dims, n, n_hat),
        post_fraction=float(Fraction(post, total)) if total else 0.0,
        n=n,
        n_hat=n_hat,
        T=dims.T,
        d=dims.d,
        m=dims.m,
        L=dims.L,
        kv_cache_elements=kv_cache_elements(dims, n_hat),
        text_tokens=text_tokens,
    )
