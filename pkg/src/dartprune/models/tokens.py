"""
Token-level containers: embeddings, auxiliary key/value features, attention maps

Containers are frozen and hold read-only float32 arrays; derived float64
views are computed once and cached.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from dartprune.errors import (
    BadParams,
    EmptyMatrix,
    GridMismatch,
    NonFinite,
    NotRowStochastic,
)

ROW_SUM_TOL = 1e-4


class Modality(IntEnum):
    VISUAL = 0
    TEXT = 1


def _frozen_array(values, dtype) -> np.ndarray:
    # read-only arrays of the right layout are shared, not copied
    if (
        isinstance(values, np.ndarray)
        and values.dtype == dtype
        and values.flags.c_contiguous
        and not values.flags.writeable
    ):
        return values
    arr = np.array(values, dtype=dtype, order="C", copy=True)
    arr.setflags(write=False)
    return arr


def _as_matrix(values, name: str) -> np.ndarray:
    arr = _frozen_array(values, np.float32)
    if arr.ndim == 1 and arr.size == 0:
        arr = _frozen_array(np.zeros((0, 0)), np.float32)
    if arr.ndim != 2:
        raise BadParams(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    return arr


def _first_nonfinite_row(row_sums: np.ndarray) -> Optional[int]:
    """
    First row whose float64 norm is not finite

    float32 entries cannot overflow a float64 sum of squares, so a norm is
    non-finite exactly when its row holds a NaN or Inf.
    """
    finite_rows = np.isfinite(row_sums)
    if finite_rows.all():
        return None
    return int(np.argmin(finite_rows))


def _l1_norms(matrix: np.ndarray) -> np.ndarray:
    arr = np.add.reduce(np.abs(matrix), axis=1, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TokenMatrix:
    """n tokens x d embedding rows with optional modality tags and grid"""

    data: np.ndarray
    modality: Optional[np.ndarray] = None
    grid: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "data", _as_matrix(self.data, "token data"))
        if self.modality is not None:
            tags = _frozen_array(self.modality, np.uint8)
            if tags.shape != (self.data.shape[0],):
                raise BadParams(
                    f"modality tags must have one entry per token ({self.data.shape[0]}), got {tags.shape}"
                )
            if tags.size and int(tags.max()) > Modality.TEXT:
                raise BadParams("modality tags must be 0 (visual) or 1 (text)")
            object.__setattr__(self, "modality", tags)
        if self.grid is not None:
            object.__setattr__(self, "grid", (int(self.grid[0]), int(self.grid[1])))

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])

    @property
    def has_modality(self) -> bool:
        return self.modality is not None

    def indices_of(self, modality: Modality) -> np.ndarray:
        """Token indices carrying a tag; untagged matrices are all visual"""
        if self.modality is None:
            if modality == Modality.VISUAL:
                return np.arange(self.n)
            return np.zeros(0, dtype=np.int64)
        return np.flatnonzero(self.modality == int(modality))

    @property
    def visual_count(self) -> int:
        return int(self.indices_of(Modality.VISUAL).size)

    @cached_property
    def data64(self) -> np.ndarray:
        arr = self.data.astype(np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def norms(self) -> np.ndarray:
        """Euclidean row norms, accumulated in float64 without a float64 copy"""
        x = self.data
        arr = np.sqrt(np.einsum("ij,ij->i", x, x, dtype=np.float64))
        arr.setflags(write=False)
        return arr


def validate(tokens: TokenMatrix) -> TokenMatrix:
    """
    Check the TokenMatrix invariants

    Returns the same matrix on success, so ``validate(validate(x))`` is ``x``.

    Raises:
        EmptyMatrix: n == 0 or d == 0
        NonFinite: first row holding NaN/Inf
        GridMismatch: grid rows x cols differs from the visual token count
    """
    if tokens.n == 0 or tokens.d == 0:
        raise EmptyMatrix(f"Token matrix is empty (n={tokens.n}, d={tokens.d})")

    bad_row = _first_nonfinite_row(tokens.norms)
    if bad_row is not None:
        raise NonFinite(bad_row)

    if tokens.grid is not None:
        rows, cols = tokens.grid
        visual = tokens.visual_count
        if rows < 1 or cols < 1 or rows * cols != visual:
            raise GridMismatch(
                f"Grid {rows}x{cols} does not cover {visual} visual tokens",
                rows=rows,
                cols=cols,
                visual=visual,
            )
    return tokens


@dataclass(frozen=True, eq=False)
class AuxFeatures:
    """Per-token key/value rows from the attention computation"""

    keys: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.keys is not None:
            object.__setattr__(self, "keys", _as_matrix(self.keys, "keys"))
        if self.values is not None:
            object.__setattr__(self, "values", _as_matrix(self.values, "values"))

    @cached_property
    def key_l1(self) -> Optional[np.ndarray]:
        """L1 row norms of the keys in float64"""
        return None if self.keys is None else _l1_norms(self.keys)

    @cached_property
    def value_l1(self) -> Optional[np.ndarray]:
        return None if self.values is None else _l1_norms(self.values)


def validate_aux(aux: AuxFeatures, n: int) -> AuxFeatures:
    """Row counts must equal the token count; entries must be finite"""
    for name, matrix in (("keys", aux.keys), ("values", aux.values)):
        if matrix is None:
            continue
        if matrix.shape[0] != n:
            raise BadParams(f"{name} has {matrix.shape[0]} rows, expected {n}", rows=matrix.shape[0], n=n)
        bad_row = _first_nonfinite_row(aux.key_l1 if name == "keys" else aux.value_l1)
        if bad_row is not None:
            raise NonFinite(bad_row, f"Non-finite value in {name} row {bad_row}")
    return aux


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """Square row-stochastic attention weights"""

    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_matrix(self.weights, "attention weights"))

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])


def validate_attention(attn: AttentionMap, n: Optional[int] = None) -> AttentionMap:
    """
    Check that the map is square, non-negative and row-stochastic

    Raises:
        NotRowStochastic: on any violation
        BadParams: when ``n`` is given and the map has a different size
    """
    w = attn.weights
    if w.shape[0] != w.shape[1] or w.shape[0] == 0:
        raise NotRowStochastic(f"Attention map must be square and non-empty, got {w.shape}")
    if n is not None and w.shape[0] != n:
        raise BadParams(f"Attention map covers {w.shape[0]} tokens, expected {n}")
    if not np.isfinite(w).all():
        raise NotRowStochastic("Attention map holds non-finite weights")
    if (w < 0).any():
        row = int(np.flatnonzero((w < 0).any(axis=1))[0])
        raise NotRowStochastic(f"Negative attention weight in row {row}", row=row)

    row_sums = w.astype(np.float64).sum(axis=1)
    off = np.abs(row_sums - 1.0) > ROW_SUM_TOL
    if off.any():
        row = int(np.flatnonzero(off)[0])
        raise NotRowStochastic(
            f"Attention row {row} sums to {row_sums[row]:.6f}, expected 1",
            row=row,
        )
    return attn
