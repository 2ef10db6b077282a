"""
Domain errors for dartprune

Every error carries a stable ``code`` so the CLI can emit
machine-readable ``{"code", "message"}`` payloads.
"""
from typing import Any, Dict, Optional


class DartError(Exception):
    """Base class for all dartprune domain errors"""

    code = "DartError"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_payload(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            payload["details"] = self.details
        return payload


class EmptyMatrix(DartError):
    """Token matrix has no rows or no columns"""
    code = "EmptyMatrix"


class NonFinite(DartError):
    """A token row contains NaN or Inf"""
    code = "NonFinite"

    def __init__(self, index: int, message: Optional[str] = None):
        super().__init__(message or f"Non-finite value in row {index}", index=index)
        self.index = index


class GridMismatch(DartError):
    """Grid geometry does not match the number of visual tokens"""
    code = "GridMismatch"


class NotRowStochastic(DartError):
    """Attention map is negative somewhere or a row does not sum to 1"""
    code = "NotRowStochastic"


class MissingAux(DartError):
    """Pivot strategy needs key/value features that were not supplied"""
    code = "MissingAux"


class MissingAttention(DartError):
    """Pivot strategy needs an attention map that was not supplied"""
    code = "MissingAttention"


class QuotaExceedsModality(DartError):
    """Modality quota asks for more pivots than the modality holds"""
    code = "QuotaExceedsModality"


class KExceedsN(DartError):
    """More pivots requested than there are candidate tokens"""
    code = "KExceedsN"


class BudgetOutOfRange(DartError):
    """Retention budget outside the admissible range"""
    code = "BudgetOutOfRange"


class EmptyRetention(DartError):
    """Retained set is empty"""
    code = "EmptyRetention"


class EmptySet(DartError):
    """Set function evaluated on an empty token set"""
    code = "EmptySet"


class NotNormalized(DartError):
    """Normalized-mode verification on tokens with unequal norms"""
    code = "NotNormalized"


class WrongAggregator(DartError):
    """Bound verification requires a max-aggregated result"""
    code = "WrongAggregator"


class BadParams(DartError):
    """Invalid generator or function parameters"""
    code = "BadParams"


class TooLarge(DartError):
    """Input exceeds an oracle or enumeration size limit"""
    code = "TooLarge"


class FormatError(DartError):
    """Malformed DTOK/DATT/CSV input"""
    code = "FormatError"


class BadArguments(DartError):
    """Command line could not be parsed"""
    code = "BadArguments"
