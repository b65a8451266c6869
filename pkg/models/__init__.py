# Import models for easier importing elsewhere
from models.family import LinearFamily
from models.measures import MeasureSpec
from models.instance import Instance
from models.sets import Ellipsoid, Grid, Lattice, RadialGraph, SetTuple
from models.harmonics import HarmonicTuple
from models.run_record import RunRecord, RunKind, RunStatus
