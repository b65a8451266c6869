# models/stability.py

"""
Deficit curves along E(s), power-law fits and second-order expansion checks.
"""

from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from models.sets import TruncationReport


class DeficitPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    s: float
    value: float
    stderr: float
    engine: str


class PowerLawFit(BaseModel):
    """deficit ~ constant * s^exponent over the fit window, with 95% t-intervals.

    `indeterminate` is set when fewer than three points clear the noise
    floor; exponent and constant are then None.
    """
    model_config = ConfigDict(frozen=True)

    exponent: Optional[float] = None
    constant: Optional[float] = None
    exponent_ci: Optional[Tuple[float, float]] = None
    constant_ci: Optional[Tuple[float, float]] = None
    window: Optional[Tuple[float, float]] = None
    points_used: int = 0
    indeterminate: bool = False


class DeficitCurve(BaseModel):
    model_config = ConfigDict(frozen=True)

    harmonic: str
    nu: int
    path: str
    engine: str
    seed: int
    points: List[DeficitPoint]
    fit: PowerLawFit
    cross_checks: List[DeficitPoint] = []

    @property
    def all_within_noise(self) -> bool:
        return all(abs(p.value) <= 3 * p.stderr + 1e-12 for p in self.points)

    def as_rows(self) -> List[dict]:
        return [{"s": p.s, "deficit": p.value, "stderr": p.stderr, "engine": p.engine} for p in self.points]

    def summary(self) -> dict:
        return {
            "harmonic": self.harmonic,
            "nu": self.nu,
            "path": self.path,
            "engine": self.engine,
            "seed": self.seed,
            "exponent": self.fit.exponent,
            "exponent_ci": list(self.fit.exponent_ci) if self.fit.exponent_ci else None,
            "constant": self.fit.constant,
            "points_used": self.fit.points_used,
            "indeterminate": self.fit.indeterminate,
            "within_noise": self.all_within_noise,
        }


class ExpansionPoint(BaseModel):
    """Measured deficit against s^2 (1/2 sum_j w_j |G_j|^2 - Q(G))"""
    model_config = ConfigDict(frozen=True)

    s: float
    measured: float
    predicted: float
    stderr: float

    @property
    def residual(self) -> float:
        return self.measured - self.predicted


class ExpansionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    harmonic: str
    nu: int
    weighted_norm: float
    q_value: float
    points: List[ExpansionPoint]
    residual_slope: Optional[float] = None

    @property
    def quadratic_coefficient(self) -> float:
        return 0.5 * self.weighted_norm - self.q_value

    @property
    def remainder_vanishes(self) -> bool:
        """Residual falls faster than s^2, or stays inside the noise"""
        return self.residual_slope is None or self.residual_slope > 2.0


class TruncationGain(BaseModel):
    """Phi(E_dagger) - Phi(E) on common samples"""
    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float
    width: float
    reports: List[TruncationReport]

    def nonnegative(self, k: float = 3.0) -> bool:
        return self.value >= -k * self.stderr - 1e-12
