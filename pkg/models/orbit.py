# models/orbit.py

"""
Results of fitting a tuple by a member of the symmetry orbit of the balls.
"""

from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict


class OrbitStart(BaseModel):
    """Outcome of one Nelder-Mead restart"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    kind: str
    distance: float
    total: float
    v: np.ndarray
    psi: np.ndarray
    evaluations: int


class OrbitFit(BaseModel):
    """dist(E, orbit(E*)) with the minimizing translation v (m x d) and psi in SL(d).

    The distance is the best value found, hence an upper bound on the
    infimum. `upper_bound` is set when fewer than two restarts agree with it
    within 1%, `near_ties` lists the restarts that do.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    distance: float
    total: float
    v: np.ndarray
    psi: np.ndarray
    starts: List[OrbitStart]
    near_ties: List[int]
    spread: float
    upper_bound: bool

    def parameters(self) -> Tuple[float, ...]:
        return tuple(float(x) for x in np.concatenate([self.v.ravel(), self.psi.ravel()]))
