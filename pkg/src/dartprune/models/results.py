"""Outputs of pivot selection and token retention"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from dartprune.models.config import Aggregator, PivotStrategy


@dataclass(frozen=True, eq=False)
class PivotSet:
    """Sorted distinct pivot indices and the scores that picked them"""

    indices: Tuple[int, ...]
    strategy: Optional[PivotStrategy] = None
    scores: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(int(i) for i in self.indices)))
        if self.scores is not None:
            object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))

    @property
    def k(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.int64)

    @classmethod
    def empty(cls) -> "PivotSet":
        return cls(indices=())


@dataclass(frozen=True, eq=False)
class RetentionResult:
    """
    A budgeted retention decision over n tokens

    ``cut_threshold`` (tau) is the largest aggregated score among retained
    non-pivot tokens, or -inf when only pivots survive. ``effective_epsilon``
    is the smallest aggregated score among pruned tokens, or +inf when
    nothing was pruned. Baselines fill these with their own conventions.
    """

    retained: np.ndarray
    pivots: PivotSet
    agg_dup: np.ndarray = field(repr=False)
    cut_threshold: float
    effective_epsilon: float
    budget: int
    n: int
    method: str = "dart"
    aggregator: Optional[Aggregator] = Aggregator.MAX
    progressive: bool = False
    pivot_epsilons: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        retained = np.array(sorted(int(i) for i in self.retained), dtype=np.int64)
        retained.setflags(write=False)
        object.__setattr__(self, "retained", retained)
        agg = np.array(self.agg_dup, dtype=np.float64, copy=True)
        agg.setflags(write=False)
        object.__setattr__(self, "agg_dup", agg)

    @property
    def pruned(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.retained] = False
        return np.flatnonzero(mask)

    @property
    def anchors(self) -> np.ndarray:
        """Tokens every pruned token is measured against"""
        if self.progressive:
            return self.retained
        return self.pivots.as_array()

    def retained_list(self):
        return [int(i) for i in self.retained]
