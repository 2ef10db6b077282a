from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from dartprune.errors import BudgetOutOfRange, KExceedsN
from dartprune.utils.numerics import round_half_away


class PivotKind(str, Enum):
    RANDOM = "random"
    EMBED_NORM = "embed-norm"
    K_NORM = "k-norm"
    V_NORM = "v-norm"
    ATTN_SCORE = "attn-score"


class Direction(str, Enum):
    MAX = "max"
    MIN = "min"


class NormOrder(str, Enum):
    L1 = "l1"
    L2 = "l2"


class Aggregator(str, Enum):
    MAX = "max"
    MIN = "min"
    MEAN = "mean"


class PivotSource(str, Enum):
    """Which tokens may become pivots"""
    ALL = "all"
    VISUAL = "visual"
    TEXT = "text"


_KIND_PREFIX = {
    PivotKind.K_NORM: "knorm",
    PivotKind.V_NORM: "vnorm",
    PivotKind.ATTN_SCORE: "attn",
}


class PivotStrategy(BaseModel):
    """How pivot tokens are scored and picked"""
    model_config = ConfigDict(frozen=True)

    kind: PivotKind = PivotKind.K_NORM
    direction: Direction = Field(default=Direction.MAX, description="Ignored for random")
    norm_order: NormOrder = Field(default=NormOrder.L1, description="Embedding norms only")

    @model_validator(mode="after")
    def _fixed_l1_for_kv(self):
        if self.kind in (PivotKind.K_NORM, PivotKind.V_NORM) and self.norm_order != NormOrder.L1:
            raise ValueError("K-norm and V-norm pivots always use the L1 norm")
        return self

    @property
    def label(self) -> str:
        """CLI name, e.g. ``knorm-max`` or ``embed-l2-min``"""
        if self.kind == PivotKind.RANDOM:
            return "random"
        if self.kind == PivotKind.EMBED_NORM:
            return f"embed-{self.norm_order.value}-{self.direction.value}"
        return f"{_KIND_PREFIX[self.kind]}-{self.direction.value}"

    @classmethod
    def parse(cls, name: str) -> "PivotStrategy":
        """
        Parse a CLI strategy name

        Accepted: random, knorm-{max,min}, vnorm-{max,min}, attn-{max,min},
        embed-{l1,l2}-{max,min}.
        """
        parts = name.strip().lower().split("-")
        if parts == ["random"]:
            return cls(kind=PivotKind.RANDOM)
        try:
            if parts[0] == "embed" and len(parts) == 3:
                return cls(kind=PivotKind.EMBED_NORM, norm_order=NormOrder(parts[1]), direction=Direction(parts[2]))
            if len(parts) == 2:
                kind = {prefix: kind for kind, prefix in _KIND_PREFIX.items()}[parts[0]]
                return cls(kind=kind, direction=Direction(parts[1]))
        except (KeyError, ValueError):
            pass
        raise ValueError(f"unknown pivot strategy {name!r}")


class ReductionConfig(BaseModel):
    """
    Everything that parameterizes one pruning run

    Exactly one of ``budget`` (tokens kept) and ``ratio`` (fraction pruned)
    is given. Defaults follow the usual setting: 8 pivots picked by maximum
    K-norm, max aggregation.
    """
    model_config = ConfigDict(frozen=True)

    budget: Optional[int] = Field(default=None, ge=1)
    ratio: Optional[float] = Field(default=None, gt=0.0, le=1.0)
    pivot_count: int = Field(default=8, ge=1)
    pivot_strategy: PivotStrategy = Field(default_factory=PivotStrategy)
    aggregator: Aggregator = Aggregator.MAX
    seed: int = Field(default=0, ge=0, le=2**64 - 1)
    modality_quota: Optional[Tuple[int, int]] = Field(default=None, description="(visual_k, text_k)")
    pivot_source: PivotSource = PivotSource.ALL
    per_pivot: bool = Field(default=False, description="Each pivot removes an equal share")
    progressive: bool = Field(default=False, description="Kept tokens join the anchor set")
    prune_text: bool = Field(default=False, description="Allow text-tagged tokens to be pruned")

    @model_validator(mode="after")
    def _consistent(self):
        if (self.budget is None) == (self.ratio is None):
            raise ValueError("give exactly one of budget or ratio")
        if self.modality_quota is not None:
            visual_k, text_k = self.modality_quota
            if visual_k < 0 or text_k < 0 or visual_k + text_k != self.pivot_count:
                raise ValueError("modality_quota must be non-negative and sum to pivot_count")
            if self.pivot_source != PivotSource.ALL:
                raise ValueError("modality_quota and pivot_source are mutually exclusive")
        if self.per_pivot and self.progressive:
            raise ValueError("per_pivot and progressive are mutually exclusive")
        if (self.progressive or self.per_pivot) and self.aggregator != Aggregator.MAX:
            raise ValueError("per_pivot and progressive retention need the max aggregator")
        return self

    def resolve_budget(self, n: int, k: Optional[int] = None) -> int:
        """
        Retained-token count for ``n`` prunable tokens holding ``k`` pivots

        A ratio maps to round-half-away(n * (1 - ratio)) clamped to [k, n];
        an explicit budget must already satisfy k <= budget <= n.
        """
        k = self.pivot_count if k is None else k
        if k > n:
            raise KExceedsN(f"{k} pivots exceed {n} prunable tokens", k=k, n=n)
        if self.ratio is not None:
            return min(max(round_half_away(n * (1.0 - self.ratio)), k), n)
        if not k <= self.budget <= n:
            raise BudgetOutOfRange(
                f"Budget {self.budget} outside [{k}, {n}]",
                budget=self.budget,
                k=k,
                n=n,
            )
        return self.budget


class ModelDims(BaseModel):
    """Transformer shape for FLOPs accounting"""
    model_config = ConfigDict(frozen=True)

    T: int = Field(default=32, ge=1, description="Layer count")
    d: int = Field(default=4096, ge=1, description="Hidden size")
    m: int = Field(default=11008, ge=1, description="FFN intermediate size")
    L: int = Field(default=2, ge=0, description="Layer after which tokens are pruned")

    @model_validator(mode="after")
    def _layer_in_range(self):
        if self.L > self.T:
            raise ValueError(f"prune layer L={self.L} exceeds layer count T={self.T}")
        return self
