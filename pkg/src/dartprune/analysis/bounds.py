"""
Hausdorff distances and the pruning distance / output-drift bounds

With max aggregation every pruned token x has an anchor p with
cos(p, x) >= eps_eff, which gives

    ||p - x||^2 <= ||p||^2 + ||x||^2 - 2 eps_eff ||p|| ||x||

That general inequality always holds. The textbook radius
sqrt(2 (1 - eps_eff)) * B follows from it only when every norm equals B,
so verification runs in one of two modes:

- normalized: the closed-form radius, for both the per-token distance and
  the Hausdorff distance, plus the output drift of a Lipschitz set function
- general: the per-pair inequality above, and output drift against K * d_H
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import cdist

from dartprune.errors import BadParams, EmptyRetention, EmptySet, NotNormalized, WrongAggregator
from dartprune.logging_config import get_logger
from dartprune.metrics import record_bound_check
from dartprune.models.config import Aggregator
from dartprune.models.reports import BoundReport
from dartprune.models.results import RetentionResult
from dartprune.models.tokens import TokenMatrix
from dartprune.pruning.dedup import cosine_rows
from dartprune.rng import Xoshiro256StarStar
from dartprune.utils.numerics import ABS_TOL, snap_scores

logger = get_logger(__name__)

# Relative norm spread tolerated by normalized mode
NORM_REL_TOL = 1e-4


class BoundMode(str, Enum):
    NORMALIZED = "normalized"
    GENERAL = "general"


def _directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return float(cdist(a, b).min(axis=1).max())


def hausdorff(tokens: TokenMatrix, retained) -> float:
    """
    Hausdorff distance between the token set and a retained subset

    Since R is a subset of X only the X-to-R direction is non-zero.

    Raises:
        EmptyRetention: R is empty
    """
    idx = np.asarray(retained, dtype=np.int64)
    if idx.size == 0:
        raise EmptyRetention("Hausdorff distance needs a non-empty retained set")
    x = tokens.data64
    return _directed_hausdorff(x, x[idx])


def set_hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two point sets"""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0 or a.size == 0 or b.size == 0:
        raise EmptySet("Hausdorff distance between empty sets is undefined")
    return max(_directed_hausdorff(a, b), _directed_hausdorff(b, a))


@dataclass(frozen=True, eq=False)
class LipschitzModel:
    """
    f(S) = A . maxpool(S), Lipschitz in the Hausdorff distance

    Coordinate-wise max pooling moves each coordinate by at most d_H, and
    the linear map turns a sup-norm change into a Euclidean one with factor
    sqrt(sum over rows of (sum of |A| along the row)^2).
    """

    A: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.A, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.size == 0:
            raise BadParams(f"Lipschitz map must be a non-empty matrix, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise BadParams("Lipschitz map holds non-finite entries")
        a.setflags(write=False)
        object.__setattr__(self, "A", a)

    @property
    def d(self) -> int:
        return int(self.A.shape[1])

    @property
    def certified_K(self) -> float:
        return float(np.sqrt((np.abs(self.A).sum(axis=1) ** 2).sum()))

    @classmethod
    def from_matrix(cls, matrix) -> "LipschitzModel":
        return cls(A=matrix)

    @classmethod
    def random(cls, d: int, d_out: int = 8, seed: int = 0) -> "LipschitzModel":
        """Gaussian map scaled by 1/sqrt(d), drawn from the seeded generator"""
        if d < 1 or d_out < 1:
            raise BadParams(f"Lipschitz map needs positive dimensions, got {d_out}x{d}")
        return cls(A=Xoshiro256StarStar(seed).gauss_matrix(d_out, d) / np.sqrt(d))


def lipschitz_eval(model: LipschitzModel, points: Union[TokenMatrix, np.ndarray]) -> np.ndarray:
    """
    Evaluate f on a token set

    Raises:
        EmptySet: no rows
        BadParams: row width differs from the model's input width
    """
    s = points.data64 if isinstance(points, TokenMatrix) else np.atleast_2d(np.asarray(points, dtype=np.float64))
    if s.shape[0] == 0:
        raise EmptySet("Set function evaluated on an empty set")
    if s.shape[1] != model.d:
        raise BadParams(f"Points have width {s.shape[1]}, model expects {model.d}")
    return model.A @ s.max(axis=0)


def output_drift(model: LipschitzModel, tokens: TokenMatrix, retained) -> float:
    """||f(X) - f(R)||"""
    x = tokens.data64
    idx = np.asarray(retained, dtype=np.int64)
    return float(np.linalg.norm(lipschitz_eval(model, x) - lipschitz_eval(model, x[idx])))


def verify_bounds(
    tokens: TokenMatrix,
    result: RetentionResult,
    model: Optional[LipschitzModel] = None,
    mode: Union[BoundMode, str] = BoundMode.NORMALIZED,
    strict: bool = True,
) -> BoundReport:
    """
    Check the distance bounds for a max-aggregated retention result

    Margins are slack divided by B (by B^2 for the squared per-pair
    inequality of general mode, by B * max(K, 1) for output drift); a check
    passes when its margin is at least -1e-6.

    With ``strict`` off, normalized mode also runs on unequal norms and
    reports the resulting violations instead of refusing.

    Raises:
        WrongAggregator: the result was not produced with max aggregation
        NotNormalized: normalized mode, unequal norms, strict
    """
    mode = BoundMode(mode)
    if result.aggregator != Aggregator.MAX:
        raise WrongAggregator(
            f"Bounds need a max-aggregated result, got {result.method} "
            f"({result.aggregator.value if result.aggregator else 'no aggregator'})"
        )

    x = tokens.data64
    norms = tokens.norms
    B = float(norms.max())
    scale = B if B > 0 else 1.0
    equal_norms = bool(norms.max() - norms.min() <= NORM_REL_TOL * scale)
    if mode == BoundMode.NORMALIZED and strict and not equal_norms:
        raise NotNormalized(
            f"Token norms range over [{norms.min():.6g}, {norms.max():.6g}]",
            min_norm=float(norms.min()),
            max_norm=B,
        )

    pruned = result.pruned
    anchors = result.anchors
    eps = result.effective_epsilon
    if pruned.size and anchors.size == 0:
        raise BadParams("Pruned tokens have no anchors to be measured against")

    d_h = hausdorff(tokens, result.retained)
    lemma1_margin = lemma2_margin = 0.0
    max_distance = bound = 0.0

    if pruned.size:
        dist = cdist(x[pruned], x[anchors])
        max_distance = float(dist.min(axis=1).max())

        if mode == BoundMode.NORMALIZED:
            bound = float(np.sqrt(max(0.0, 2.0 * (1.0 - eps)))) * B
            lemma1_margin = (bound - max_distance) / scale
        else:
            cos = snap_scores(cosine_rows(tokens, anchors)[:, pruned])
            best = cos.argmax(axis=0)
            p_hat = anchors[best]
            lhs = ((x[p_hat] - x[pruned]) ** 2).sum(axis=1)
            rhs = norms[p_hat] ** 2 + norms[pruned] ** 2 - 2.0 * eps * norms[p_hat] * norms[pruned]
            lemma1_margin = float(((rhs - lhs) / scale**2).min())
            bound = float(np.sqrt(np.maximum(rhs, 0.0)).max())
        lemma2_margin = (bound - d_h) / scale

    theorem_ok = None
    theorem_lhs = theorem_rhs = certified = None
    margins = [lemma1_margin, lemma2_margin]
    if model is not None:
        certified = model.certified_K
        theorem_lhs = output_drift(model, tokens, result.retained)
        theorem_rhs = certified * (bound if mode == BoundMode.NORMALIZED else d_h)
        theorem_margin = (theorem_rhs - theorem_lhs) / (scale * max(certified, 1.0))
        margins.append(theorem_margin)
        theorem_ok = theorem_margin >= -ABS_TOL

    report = BoundReport(
        mode=mode.value,
        B=B,
        eps_eff=eps,
        hausdorff=d_h,
        bound=bound,
        lemma1_ok=lemma1_margin >= -ABS_TOL,
        lemma2_ok=lemma2_margin >= -ABS_TOL,
        theorem1_ok=theorem_ok,
        worst_margin=min(margins),
        lemma1_max_distance=max_distance,
        theorem1_lhs=theorem_lhs,
        theorem1_rhs=theorem_rhs,
        certified_K=certified,
        equal_norms=equal_norms,
        anchors="retained" if result.progressive else "pivots",
        checked=int(pruned.size),
    )

    record_bound_check("lemma1", report.lemma1_ok)
    record_bound_check("lemma2", report.lemma2_ok)
    if theorem_ok is not None:
        record_bound_check("theorem1", theorem_ok)
    logger.info(
        "bounds_verified",
        mode=mode.value,
        lemma1_ok=report.lemma1_ok,
        lemma2_ok=report.lemma2_ok,
        theorem1_ok=theorem_ok,
        worst_margin=report.worst_margin,
    )
    return report
