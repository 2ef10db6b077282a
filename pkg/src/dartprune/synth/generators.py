"""
Synthetic token sets with controlled duplication structure

Both generators draw every Gaussian from one seeded stream in a fixed order
(see docs/PRNG.md), so a seed reproduces the same matrix everywhere.
"""
import numpy as np

from dartprune.errors import BadParams
from dartprune.logging_config import get_logger
from dartprune.models.tokens import TokenMatrix, validate
from dartprune.resource_limits import ResourceValidator
from dartprune.rng import Xoshiro256StarStar

logger = get_logger(__name__)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    out = x.copy()
    nonzero = norms > 0
    out[nonzero] /= norms[nonzero, None]
    return out


def cluster_labels(n: int, clusters: int) -> np.ndarray:
    """Round-robin cluster assignment used by gen_clustered"""
    return np.arange(n) % clusters


def gen_clustered(
    n: int,
    d: int,
    clusters: int,
    spread: float,
    seed: int = 0,
    normalize: bool = True,
) -> TokenMatrix:
    """
    Tokens scattered around unit-norm cluster centers

    Centers are normalized Gaussians (c x d, drawn first). Token i belongs
    to cluster i mod c and is center + spread * Gaussian (d draws per token,
    in token order), then normalized. With spread 0 each token is its
    center exactly.

    Raises:
        BadParams: n, d or clusters out of range, negative spread
    """
    if n < 1 or d < 1:
        raise BadParams(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if not 1 <= clusters <= n:
        raise BadParams(f"clusters must lie in [1, {n}], got {clusters}")
    if not spread >= 0:
        raise BadParams(f"spread must be non-negative, got {spread}")

    ResourceValidator.validate_matrix_allocation(n, d)
    rng = Xoshiro256StarStar(seed)
    centers = _unit_rows(rng.gauss_matrix(clusters, d))
    noise = rng.gauss_matrix(n, d)
    tokens = centers[cluster_labels(n, clusters)] + spread * noise
    if normalize and spread > 0:
        tokens = _unit_rows(tokens)

    logger.debug("synth_clustered", n=n, d=d, clusters=clusters, spread=spread, seed=seed)
    return validate(TokenMatrix(tokens))


def gen_oversmoothed(
    n: int,
    d: int,
    steps: int,
    mix: float,
    seed: int = 0,
    normalize: bool = True,
) -> TokenMatrix:
    """
    Gaussian tokens pulled toward their mean, as deep layers do

    Each of ``steps`` rounds sets x_i <- (1 - mix) x_i + mix * mean(x);
    rows are normalized once at the end.

    Raises:
        BadParams: negative steps, mix outside [0, 1]
    """
    if n < 1 or d < 1:
        raise BadParams(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if steps < 0:
        raise BadParams(f"steps must be non-negative, got {steps}")
    if not 0.0 <= mix <= 1.0:
        raise BadParams(f"mix must lie in [0, 1], got {mix}")

    ResourceValidator.validate_matrix_allocation(n, d)
    x = Xoshiro256StarStar(seed).gauss_matrix(n, d)
    for _ in range(steps):
        x = (1.0 - mix) * x + mix * x.mean(axis=0)
    if normalize:
        x = _unit_rows(x)

    logger.debug("synth_oversmoothed", n=n, d=d, steps=steps, mix=mix, seed=seed)
    return validate(TokenMatrix(x))


def mean_pairwise_cosine(tokens: TokenMatrix) -> float:
    """Mean cosine over distinct pairs; 1.0 for a single token"""
    if tokens.n < 2:
        return 1.0
    x = tokens.data64
    norms = tokens.norms
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    gram = unit @ unit.T
    off = gram.sum() - np.trace(gram)
    return float(off / (tokens.n * (tokens.n - 1)))
