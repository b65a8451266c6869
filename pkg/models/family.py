# models/family.py

"""
Linear families L = (L_j) and their nondegeneracy reports.
"""

from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class LinearFamily(BaseModel):
    """Coefficient matrix of the maps L_j^1(x) = sum_i a_{i,j} x_i, one row per j.

    The same coefficients act blockwise on (R^d)^m, so the family is fully
    described by the |J| x m matrix and the ambient dimension d.
    """
    model_config = ConfigDict(frozen=True)

    coeffs: Tuple[Tuple[float, ...], ...]
    dim_d: int = 1
    labels: Optional[Tuple[str, ...]] = None

    @field_validator("coeffs", mode="before")
    @classmethod
    def _as_rows(cls, value):
        rows = tuple(tuple(float(a) for a in row) for row in np.asarray(value, dtype=float).tolist())
        if not rows or not rows[0]:
            raise ValueError("coeffs must be a nonempty matrix")
        return rows

    @field_validator("dim_d")
    @classmethod
    def _positive_dimension(cls, value):
        if value < 1:
            raise ValueError("dim_d must be at least 1")
        return value

    @model_validator(mode="after")
    def _consistent_shape(self):
        widths = {len(row) for row in self.coeffs}
        if len(widths) != 1:
            raise ValueError("coeffs rows must all have the same length")
        if self.labels is not None and len(self.labels) != len(self.coeffs):
            raise ValueError("labels must name every row of coeffs")
        return self

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    @property
    def m(self) -> int:
        return len(self.coeffs[0])

    @property
    def size(self) -> int:
        """|J|"""
        return len(self.coeffs)

    def label(self, j: int) -> str:
        return self.labels[j] if self.labels else str(j + 1)

    def with_coeffs(self, coeffs: np.ndarray) -> "LinearFamily":
        return LinearFamily(coeffs=coeffs, dim_d=self.dim_d, labels=self.labels)

    def with_dimension(self, d: int) -> "LinearFamily":
        return LinearFamily(coeffs=self.coeffs, dim_d=d, labels=self.labels)


class NondegeneracyReport(BaseModel):
    """Per-condition outcome of the nondegeneracy test"""
    model_config = ConfigDict(frozen=True)

    nonzero_rows: bool
    pairwise_independent: bool
    complements_full_rank: bool
    zero_rows: List[int] = []
    proportional_pairs: List[Tuple[int, int]] = []
    rank_deficient_complements: List[int] = []
    rank_tolerance: float

    @property
    def passed(self) -> bool:
        return self.nonzero_rows and self.pairwise_independent and self.complements_full_rank


class FiberChart(BaseModel):
    """Change of variables x = H u adapted to one or two of the maps.

    For a single index j, L_j(Hu) = u_1. For a pair (i, j), L_i(Hu) = u_1 and
    L_j(Hu) = u_2. `rows` holds coeffs @ H, and `jacobian` is |det H| (raise
    it to the power d for the lifted maps).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    pinned: Tuple[int, ...]
    H: np.ndarray
    rows: np.ndarray
    jacobian: float
    in_span: Tuple[int, ...] = ()
    outside_span: Tuple[int, ...] = ()
