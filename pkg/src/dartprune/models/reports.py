"""
Report models serialized by the CLI

Every float goes out with 9 significant digits; infinities are written as
the strings ``"+inf"`` / ``"-inf"`` so the output stays strict JSON, and are
read back into floats on validation.
"""
import math
from typing import Annotated, Any, Dict, List, Optional, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer

SIGNIFICANT_DIGITS = 9


def encode_float(value: float) -> Union[float, str]:
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return float(f"{value:.{SIGNIFICANT_DIGITS}g}") + 0.0


def decode_float(value: Any) -> Any:
    if isinstance(value, str):
        lowered = value.strip().lower()
        if lowered in ("+inf", "inf"):
            return math.inf
        if lowered == "-inf":
            return -math.inf
        if lowered == "nan":
            return math.nan
    return value


JsonFloat = Annotated[
    float,
    BeforeValidator(decode_float),
    PlainSerializer(encode_float, return_type=Union[float, str], when_used="json"),
]


class BoundReport(BaseModel):
    """Outcome of checking the distance and output-drift bounds"""
    mode: str = Field(..., description="normalized or general")
    B: JsonFloat = Field(..., description="Largest token L2 norm")
    eps_eff: JsonFloat
    hausdorff: JsonFloat
    bound: JsonFloat = Field(..., description="Radius the pruned tokens are held to")
    lemma1_ok: bool
    lemma2_ok: bool
    theorem1_ok: Optional[bool] = Field(default=None, description="None without a Lipschitz model")
    worst_margin: JsonFloat = Field(..., description="Most negative slack, relative to B")
    lemma1_max_distance: JsonFloat = 0.0
    theorem1_lhs: Optional[JsonFloat] = None
    theorem1_rhs: Optional[JsonFloat] = None
    certified_K: Optional[JsonFloat] = None
    equal_norms: bool = True
    anchors: str = "pivots"
    checked: int = Field(default=0, description="Pruned tokens checked")

    @property
    def ok(self) -> bool:
        return self.lemma1_ok and self.lemma2_ok and self.theorem1_ok is not False


class OverlapStats(BaseModel):
    jaccard: JsonFloat
    min_overlap: JsonFloat
    intersection: int
    a_size: int
    b_size: int


class PositionStats(BaseModel):
    mean_norm_index: JsonFloat
    grid_chi2: Optional[JsonFloat] = None
    grid_p_value: Optional[JsonFloat] = None
    grid_counts: Optional[List[List[int]]] = Field(default=None, description="3x3 retained counts")


class FlopsSummary(BaseModel):
    total: int
    post: int
    ratio: JsonFloat
    post_fraction: JsonFloat = Field(..., description="post / total")
    n: int
    n_hat: int
    T: int
    d: int
    m: int
    L: int
    kv_cache_elements: int
    text_tokens: Optional[int] = Field(default=None, description="Assumed text-token count inside n")


class BiasEstimate(BaseModel):
    mean: JsonFloat
    stderr: JsonFloat
    samples: int
    budget: int
    n: int
    exhaustive: bool


class RunSummary(BaseModel):
    """One side of a comparison"""
    label: str
    method: str
    retained: List[int]
    pivots: List[int]
    tau: JsonFloat
    eps_eff: JsonFloat


class Report(BaseModel):
    """Top-level JSON document; every key is always present"""
    model_config = ConfigDict(extra="forbid")

    config: Dict[str, Any] = Field(default_factory=dict)
    retained: Optional[List[int]] = None
    pivots: Optional[List[int]] = None
    tau: Optional[JsonFloat] = None
    eps_eff: Optional[JsonFloat] = None
    flops: Optional[FlopsSummary] = None
    bounds: Optional[BoundReport] = None
    overlap: Optional[OverlapStats] = None
    position: Optional[PositionStats] = None
    compared: Optional[List[RunSummary]] = None
    bias: Optional[BiasEstimate] = None
    timing_ms: Optional[JsonFloat] = None
