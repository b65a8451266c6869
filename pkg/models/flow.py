# models/flow.py

"""
Trajectories of the Steiner flow.
"""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict


class FlowStep(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    direction: Tuple[float, ...]
    phi: float
    stderr: float
    distance: float
    measures: Tuple[float, ...]
    monotone: bool = True


class FlowTrajectory(BaseModel):
    """Phi and max_j |E_j Delta B_j| after every Steiner step.

    `slack` bounds the change of Phi caused by rounding fibers to whole
    cells; the monotonicity check allows 3 stderr plus this slack.
    """
    model_config = ConfigDict(frozen=True)

    engine: str
    seed: int
    steps: List[FlowStep]
    raster_floor: float
    slack: float
    stalled: bool = False
    stalled_at: int = -1
    converged: bool = False
    violations: List[int] = []

    @property
    def monotone(self) -> bool:
        return not self.violations

    @property
    def final_distance(self) -> float:
        return self.steps[-1].distance

    def as_rows(self) -> List[dict]:
        return [
            {"step": s.step, "phi": s.phi, "stderr": s.stderr, "distance": s.distance}
            for s in self.steps
        ]
