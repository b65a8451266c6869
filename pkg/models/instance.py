# models/instance.py

"""
A problem instance: a linear family together with target measures.
"""

from typing import Optional

from pydantic import BaseModel, ConfigDict, model_validator

from models.family import LinearFamily
from models.measures import MeasureSpec


class Instance(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    family: LinearFamily
    spec: MeasureSpec
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _matching_sizes(self):
        if self.family.size != self.spec.size:
            raise ValueError(f"{self.family.size} maps but {self.spec.size} measures")
        if self.family.dim_d != self.spec.d:
            raise ValueError("family and measures disagree on the dimension d")
        return self

    @property
    def d(self) -> int:
        return self.spec.d
