# tests/conftest.py

"""
Shared fixtures: Riesz-Sobolev families, measure specs and small rasters.
"""

import os
import sys

import numpy as np
import pytest

# Add parent directory to path to import services
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from models.family import LinearFamily
from models.measures import MeasureSpec
from models.sets import Lattice

INSTANCES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "instances")

RS_ROWS = [[1, 0], [0, 1], [1, 1]]


def pytest_collection_modifyitems(config, items):
    if os.getenv("RBLL_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="acceptance-scale run; set RBLL_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rs_family():
    return LinearFamily(coeffs=RS_ROWS, dim_d=1, labels=("f", "g", "h"))


@pytest.fixture
def rs_family_2d():
    return LinearFamily(coeffs=RS_ROWS, dim_d=2, labels=("f", "g", "h"))


@pytest.fixture
def spec111():
    return MeasureSpec(e=(1.0, 1.0, 1.0), d=1)


@pytest.fixture
def spec_2d():
    """Three unit disks"""
    return MeasureSpec.from_radii([1.0, 1.0, 1.0], 2)


@pytest.fixture
def coarse_lattice_1d():
    h = 1.0 / 64
    return Lattice(origin=np.array([-1.5]), h=h, shape=(192,))


@pytest.fixture
def coarse_lattice_2d():
    h = 1.0 / 16
    return Lattice(origin=np.array([-1.5, -1.5]), h=h, shape=(48, 48))


@pytest.fixture
def instance_path():
    return lambda name: os.path.join(INSTANCES, f"{name}.cfg")
