# models/polytope.py

"""
The polytope K_e and the admissibility certificate built from it.
"""

import enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from models.kernels import DerivativeEstimate


class Verdict(str, enum.Enum):
    INADMISSIBLE = "inadmissible"
    WEAKLY_ADMISSIBLE = "weakly-admissible"
    STRICTLY_ADMISSIBLE = "strictly-admissible"


class PolytopeH(BaseModel):
    """{x in R^m : |rows_j . x| <= bounds_j for all j}"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rows: np.ndarray
    bounds: np.ndarray

    @property
    def m(self) -> int:
        return self.rows.shape[1]

    @property
    def A_ub(self) -> np.ndarray:
        return np.vstack([self.rows, -self.rows])

    @property
    def b_ub(self) -> np.ndarray:
        return np.concatenate([self.bounds, self.bounds])

    def slacks(self, x) -> np.ndarray:
        return self.bounds - np.abs(self.rows @ np.asarray(x, dtype=float))

    def contains(self, x, tol: float = 1e-12) -> bool:
        return bool(np.all(self.slacks(x) >= -tol))

    def scaled(self, factor: float) -> "PolytopeH":
        return PolytopeH(rows=self.rows, bounds=self.bounds * factor)


class FaceWitness(BaseModel):
    """Best point on the face L_k = sign * b_k.

    `slack` is the minimum over i != k of b_i - |L_i(x)|; it is negative
    (or None when the face plane misses K_e entirely) for unreachable faces.
    """
    model_config = ConfigDict(frozen=True)

    index: int
    sign: int
    point: Optional[Tuple[float, ...]] = None
    slack: Optional[float] = None
    slacks: Optional[Tuple[float, ...]] = None
    reached: bool
    strict: bool


class GenericityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    generic: bool
    vertices: List[Tuple[float, ...]]
    active_counts: List[int]
    volume: float


class AdmissibilityCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Verdict
    d: int
    bounds: Tuple[float, ...]
    witnesses: List[FaceWitness]
    derivatives: List[DerivativeEstimate]
    genericity: Optional[GenericityReport] = None
    margin: float

    @property
    def admissible(self) -> bool:
        return self.verdict != Verdict.INADMISSIBLE

    @property
    def strictly_admissible(self) -> bool:
        return self.verdict == Verdict.STRICTLY_ADMISSIBLE
