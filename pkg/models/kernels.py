# models/kernels.py

"""
Slice-volume kernels K_j, their boundary derivatives, and the two-point
kernels M_{i,j}.
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict


class DerivativeEstimate(BaseModel):
    """One-sided difference estimate of a radial derivative at t0.

    `applicable` is False when the kernel vanishes at t0; value and error
    are then None.
    """
    model_config = ConfigDict(frozen=True)

    index: int
    t0: float
    side: str = "left"
    applicable: bool
    value: Optional[float] = None
    error: Optional[float] = None
    steps: Tuple[float, ...] = ()
    strictly_negative: bool = False


class GammaEstimate(BaseModel):
    """gamma_j = |grad K_j| on the sphere of radius r_j"""
    model_config = ConfigDict(frozen=True)

    index: int
    radius: float
    left: DerivativeEstimate
    right: DerivativeEstimate
    gamma: Optional[float] = None
    mismatch: Optional[float] = None
    differentiable: bool = False


class KernelProfile(BaseModel):
    """Samples of K_j(t, 0, ..., 0) on a grid of radii"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    d: int
    t: np.ndarray
    values: np.ndarray
    support: float
    engine: str
    derivative: Optional[DerivativeEstimate] = None

    def as_table(self) -> str:
        """Two-column text (t, K(t)) with full precision"""
        return "".join(f"{repr(float(a))} {repr(float(b))}\n" for a, b in zip(self.t, self.values))


class DegeneracyProfile(BaseModel):
    """Angular measure of the boundary layer ||L_k(r_i theta, r_j theta')| - r_k| <= delta"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    i: int
    j: int
    k: int
    deltas: np.ndarray
    measures: np.ndarray
    slope: float


class PairKernel(BaseModel):
    """Data defining M_{i,j}(x, y).

    `rows` are the coefficient rows in the pair chart, where L_i = u_1 and
    L_j = u_2. `in_span` lists the maps that lie in span{L_i, L_j} and only
    contribute indicator factors. `outside_span` lists the maps integrated
    over the remaining (m-2)d variables. `c` is the Jacobian constant
    |det H|^d of the chart.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    i: int
    j: int
    d: int
    rows: np.ndarray
    radii: np.ndarray
    in_span: Tuple[int, ...]
    outside_span: Tuple[int, ...]
    c: float
