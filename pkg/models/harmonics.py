# models/harmonics.py

"""
Spherical harmonic tuples and spectral reports.

Harmonics of degree nu are stored by their coefficients in a fixed real
orthonormal basis of H_nu on L^2(S^{d-1}, sigma), sigma the surface
measure:

    d=2: cos(nu theta)/sqrt(pi), sin(nu theta)/sqrt(pi)
    d=3: real spherical harmonics, order 0, then cos/sin pairs for orders 1..nu
"""

from math import factorial, pi, sqrt
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.special import lpmv


def basis_dimension(d: int, nu: int) -> int:
    if d == 2:
        return 1 if nu == 0 else 2
    if d == 3:
        return 2 * nu + 1
    raise ValueError(f"harmonic bases exist for d in (2, 3), got {d}")


def basis_values(d: int, nu: int, directions: np.ndarray) -> np.ndarray:
    """Orthonormal basis of H_nu evaluated at unit directions; shape (dim, N)"""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    if d == 2:
        theta = np.arctan2(directions[:, 1], directions[:, 0])
        if nu == 0:
            return np.full((1, len(theta)), 1.0 / sqrt(2 * pi))
        return np.vstack([np.cos(nu * theta), np.sin(nu * theta)]) / sqrt(pi)
    if d == 3:
        z = np.clip(directions[:, 2], -1.0, 1.0)
        phi = np.arctan2(directions[:, 1], directions[:, 0])
        rows = [sqrt((2 * nu + 1) / (4 * pi)) * lpmv(0, nu, z)]
        for order in range(1, nu + 1):
            norm = sqrt(2 * (2 * nu + 1) / (4 * pi) * factorial(nu - order) / factorial(nu + order))
            legendre = lpmv(order, nu, z)
            rows.append(norm * legendre * np.cos(order * phi))
            rows.append(norm * legendre * np.sin(order * phi))
        return np.vstack(rows)
    raise ValueError(f"harmonic bases exist for d in (2, 3), got {d}")


class HarmonicTuple(BaseModel):
    """A J-tuple (G_j) of degree-nu harmonics, one coefficient row per index"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int
    nu: int
    coeffs: np.ndarray
    balanced: bool = False
    name: str = ""

    @field_validator("coeffs", mode="before")
    @classmethod
    def _coeffs(cls, value):
        return np.atleast_2d(np.array(value, dtype=float))

    @model_validator(mode="after")
    def _shape(self):
        if self.nu < 1:
            raise ValueError("harmonic tuples have degree nu >= 1")
        if self.coeffs.shape[1] != basis_dimension(self.d, self.nu):
            raise ValueError(f"degree {self.nu} in d={self.d} needs {basis_dimension(self.d, self.nu)} coefficients")
        return self

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]

    def values(self, directions: np.ndarray) -> np.ndarray:
        """G_j at the given directions; shape (J, N)"""
        return self.coeffs @ basis_values(self.d, self.nu, directions)

    def component_norms_squared(self) -> np.ndarray:
        return np.sum(self.coeffs ** 2, axis=1)

    def norm_squared(self) -> float:
        return float(np.sum(self.coeffs ** 2))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def with_coeffs(self, coeffs: np.ndarray, balanced: bool = None) -> "HarmonicTuple":
        return HarmonicTuple(
            d=self.d, nu=self.nu, coeffs=coeffs,
            balanced=self.balanced if balanced is None else balanced, name=self.name,
        )


class RotationCertificate(BaseModel):
    """Outcome of the search for a rotation with P_sharp nonvanishing"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    found: bool
    rotation: Optional[np.ndarray] = None
    angle: Optional[float] = None
    trials: int
    p_sharp_l2: float


class SpectralReport(BaseModel):
    """Per-degree scalars, weights and balanced ratios"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int
    degrees: List[int]
    pairs: List[Tuple[int, int]]
    scalars: np.ndarray
    weights: np.ndarray
    gammas: np.ndarray
    ratios: np.ndarray
    full_ratios: np.ndarray
    operator_norms: np.ndarray
    pinned: Tuple[int, ...]
    designated: int
    tail_exponent: Optional[float] = None
    tail_constant: Optional[float] = None
    tail_bound: Optional[float] = None

    @property
    def gap(self) -> float:
        """A = max over computed degrees of A_nu"""
        return float(np.max(self.ratios))

    def scalar(self, i: int, j: int, nu: int) -> float:
        pair = (min(i, j), max(i, j))
        return float(self.scalars[self.degrees.index(nu), self.pairs.index(pair)])

    def summary(self) -> Dict[str, float]:
        return {
            "gap": self.gap,
            "margin": 0.5 - self.gap,
            "operator_norm_first": float(self.operator_norms[0]),
            "operator_norm_last": float(self.operator_norms[-1]),
        }
