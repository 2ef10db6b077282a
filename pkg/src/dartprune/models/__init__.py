from .tokens import (
    Modality,
    TokenMatrix,
    AuxFeatures,
    AttentionMap,
    validate,
    validate_aux,
    validate_attention,
)
from .config import (
    PivotKind,
    Direction,
    NormOrder,
    Aggregator,
    PivotSource,
    PivotStrategy,
    ReductionConfig,
    ModelDims,
)
from .results import PivotSet, RetentionResult
from .reports import (
    BoundReport,
    OverlapStats,
    PositionStats,
    FlopsSummary,
    BiasEstimate,
    RunSummary,
    Report,
)

__all__ = [
    'Modality', 'TokenMatrix', 'AuxFeatures', 'AttentionMap',
    'validate', 'validate_aux', 'validate_attention',
    'PivotKind', 'Direction', 'NormOrder', 'Aggregator', 'PivotSource',
    'PivotStrategy', 'ReductionConfig', 'ModelDims',
    'PivotSet', 'RetentionResult',
    'BoundReport', 'OverlapStats', 'PositionStats', 'FlopsSummary',
    'BiasEstimate', 'RunSummary', 'Report',
]
