# models/measures.py

"""
Target measures e_j and the radii of the balls carrying them.
"""

from math import gamma, pi
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


def unit_ball_volume(d: int) -> float:
    """omega_d, the Lebesgue measure of the unit ball in R^d"""
    return pi ** (d / 2) / gamma(d / 2 + 1)


def unit_sphere_area(d: int) -> float:
    """sigma(S^{d-1}) = d * omega_d"""
    return d * unit_ball_volume(d)


class MeasureSpec(BaseModel):
    """Measures e_j with radii r_j defined by omega_d r_j^d = e_j"""
    model_config = ConfigDict(frozen=True)

    e: Tuple[float, ...]
    d: int = 1

    @field_validator("e", mode="before")
    @classmethod
    def _positive(cls, value):
        values = tuple(float(v) for v in np.atleast_1d(np.asarray(value, dtype=float)))
        if not values or min(values) <= 0:
            raise ValueError("measures must be positive")
        return values

    @classmethod
    def from_radii(cls, radii, d: int) -> "MeasureSpec":
        omega = unit_ball_volume(d)
        return cls(e=[omega * float(r) ** d for r in radii], d=d)

    @property
    def radii(self) -> np.ndarray:
        return (np.array(self.e) / unit_ball_volume(self.d)) ** (1.0 / self.d)

    @property
    def r_max(self) -> float:
        return float(np.max(self.radii))

    @property
    def size(self) -> int:
        return len(self.e)
