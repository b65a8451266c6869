# models/estimates.py

"""
Estimates of the functional and of deficits.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict


class MCEstimate(BaseModel):
    """Monte Carlo value; stderr = box volume * Jacobian * sample stdev / sqrt(n)"""
    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float
    n: int
    seed: int
    box_volume: float


class PhiEstimate(BaseModel):
    """Value of the functional from any engine; exact engines report stderr 0"""
    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float
    engine: str
    n: Optional[int] = None
    seed: Optional[int] = None
    multi_interval_fibers: int = 0


class DeficitEstimate(BaseModel):
    """Phi(E*) - Phi(E) with a combined error bar"""
    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float
    engine: str
    phi_star: Optional[float] = None
    phi: Optional[float] = None
    n: Optional[int] = None
    seed: Optional[int] = None

    def within_noise(self, k: float = 3.0) -> bool:
        return abs(self.value) <= k * self.stderr + 1e-12

    def nonnegative(self, k: float = 3.0) -> bool:
        return self.value >= -k * self.stderr - 1e-12


class LambdaSubspace(BaseModel):
    """Lambda_d = {(L_j(x))_j : x in (R^d)^m}, parametrized by the J' coordinates.

    `normalization` is |det A[J']|^{-d}, the Jacobian from y_{J'} back to x,
    so the induced measure is normalization * dy_{J'}.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dimension: int
    m: int
    d: int
    coeffs: np.ndarray
    pinned: Tuple[int, ...]
    normalization: float

    def embed(self, y_pinned: np.ndarray) -> np.ndarray:
        """Complete y_{J'} (shape (m, d)) to the full point of Lambda_d (shape (|J|, d))"""
        block = self.coeffs[list(self.pinned)]
        return self.coeffs @ np.linalg.solve(block, np.asarray(y_pinned, dtype=float))
