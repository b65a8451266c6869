# services/symflow_service.py

"""
Steiner symmetrization of raster tuples and the flow E -> E*.

A Steiner step along u groups the lattice cells into strips parallel to u
(by the perpendicular coordinate of their centers, binned at the cell size)
and, inside every strip, keeps as many cells as the set had there, choosing
the ones closest to the line through the origin. Cell counts per strip are
preserved, so measures are preserved exactly.
"""

import logging
from functools import lru_cache
from typing import List, Sequence, Tuple

import numpy as np

from models.family import LinearFamily
from models.flow import FlowStep, FlowTrajectory
from models.measures import MeasureSpec, unit_sphere_area
from models.sets import Ellipsoid, Grid, Lattice, SetTuple
from services import functional_service, kernel_service, settuple_service
from services.errors import ArgumentError, PropertyViolation
from services.rng_service import Purpose, resolve_seed, stream
from config import settings

logger = logging.getLogger("symflow_service")

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_schedule(d: int, steps: int) -> List[Tuple[float, ...]]:
    """Directions at angles pi k (sqrt(5) - 1) / 2 mod pi"""
    if d == 1:
        return [(1.0,)] * steps
    if d != 2:
        raise ArgumentError("Steiner flows run on d=1 and d=2 rasters")
    angles = np.mod(np.pi * GOLDEN * np.arange(steps), np.pi)
    return [(float(np.cos(a)), float(np.sin(a))) for a in angles]


def axis_schedule(d: int, steps: int) -> List[Tuple[float, ...]]:
    """Alternate between the coordinate axes"""
    axes = [tuple(float(v) for v in row) for row in np.eye(d)]
    return [axes[k % d] for k in range(steps)]


@lru_cache(maxsize=16)
def _strip_ranks(origin: Tuple[float, ...], h: float, shape: Tuple[int, ...],
                 direction: Tuple[float, ...]) -> Tuple[np.ndarray, np.ndarray]:
    """Strip index of every cell and its rank by distance to the origin within the strip"""
    centers = Lattice(origin=np.array(origin), h=h, shape=shape).centers()
    u = np.array(direction)
    q = centers @ u
    if len(shape) == 1:
        strip = np.zeros(len(q), dtype=np.int64)
    else:
        strip = np.floor(centers @ np.array([-u[1], u[0]]) / h + 0.5).astype(np.int64)
        strip -= strip.min()
    distance = np.round(np.abs(q) / h, 9)
    # equal distances alternate sides from strip to strip
    flip = (q < 0) ^ (strip % 2 == 1)
    order = np.lexsort((flip, distance, strip))
    ordered = strip[order]
    first = np.searchsorted(ordered, ordered, side="left")
    rank = np.empty(len(q), dtype=np.int64)
    rank[order] = np.arange(len(q)) - first
    return strip, rank


def _unit(direction, d: int) -> Tuple[float, ...]:
    u = np.atleast_1d(np.asarray(direction, dtype=float))
    if u.shape != (d,):
        raise ArgumentError(f"direction must have {d} components")
    norm = float(np.linalg.norm(u))
    if norm == 0:
        raise ArgumentError("direction must be nonzero")
    return tuple(float(v) for v in u / norm)


def steiner_set(E: Grid, direction) -> Tuple[Grid, int]:
    """Steiner symmetral of one raster; also returns the number of nonempty strips"""
    u = _unit(direction, E.d)
    strip, rank = _strip_ranks(tuple(float(v) for v in E.origin), float(E.h), tuple(E.mask.shape), u)
    occupied = E.mask.ravel()
    counts = np.bincount(strip[occupied], minlength=int(strip.max()) + 1)
    mask = (rank < counts[strip]).reshape(E.mask.shape)
    return E.with_mask(mask), int(np.count_nonzero(counts))


def steiner_step(fam: LinearFamily, E: SetTuple, direction) -> SetTuple:
    """
    Symmetrize every set along the same direction.

    Raises:
        ArgumentError: If a set is not a grid or sizes disagree
        PropertyViolation: If a cell count changes
    """
    if E.size != fam.size:
        raise ArgumentError(f"{fam.size} maps but {E.size} sets")
    if any(not isinstance(S, Grid) for S in E.sets):
        raise ArgumentError("Steiner steps act on grid tuples; rasterize first")
    if E.d > 2:
        raise ArgumentError("Steiner flows run on d=1 and d=2 rasters")
    sets = []
    for j, S in enumerate(E.sets):
        T, _ = steiner_set(S, direction)
        if np.count_nonzero(T.mask) != np.count_nonzero(S.mask):
            logger.error(f"Steiner step changed the cell count of set {j}")
            raise PropertyViolation(f"Steiner step did not preserve the measure of set {j}")
        sets.append(T)
    return SetTuple(sets=sets)


def raster_floor(E: SetTuple) -> float:
    """One layer of boundary cells around the largest ball"""
    spec = settuple_service.measure_spec_of(E)
    d = E.d
    h = max(S.h for S in E.sets)
    return float(unit_sphere_area(d) * spec.r_max ** (d - 1) * h)


def _distance(E: SetTuple) -> float:
    balls = settuple_service.make_ball_tuple(settuple_service.measure_spec_of(E))
    return float(max(settuple_service.symmetric_difference_measure(E[j], balls[j]) for j in range(E.size)))


def _slack(E: SetTuple, fibers: Sequence[int], peaks: np.ndarray) -> float:
    """Half a cell per line fiber, weighted by the largest value of the ball kernel"""
    return float(sum(0.5 * S.h ** S.d * n * peak for S, n, peak in zip(E.sets, fibers, peaks)))


def default_engine(fam: LinearFamily, E: SetTuple) -> str:
    return "exact" if E.d == 1 and fam.m == 2 else "mc"


def flow_to_balls(fam: LinearFamily, E: SetTuple, schedule: Sequence = None, engine: str = None,
                  n: int = None, seed: int = None, steps: int = None) -> FlowTrajectory:
    """
    Run Steiner steps along `schedule`, recording Phi and the distance to the balls.

    Phi is estimated with the same seed at every step. A stall (distance down
    by less than 1% over 10 steps while above twice the raster floor) and
    steps where Phi drops beyond 3 stderr plus the raster slack are recorded
    on the trajectory, not raised.
    """
    if any(not isinstance(S, Grid) for S in E.sets):
        raise ArgumentError("the flow runs on grid tuples")
    seed = resolve_seed(seed)
    engine = engine or default_engine(fam, E)
    schedule = list(schedule) if schedule is not None else golden_schedule(E.d, steps or settings.FLOW_STEPS)

    e = E.measures()
    peaks = np.array([
        kernel_service.eval_K(fam, e, E.d, j, 0.0, samples=settings.MC_SAMPLES // 16, seed=seed)
        for j in range(fam.size)
    ])
    floor = raster_floor(E)

    def record(k, direction, current, fibers):
        phi = functional_service.eval_phi(fam, current, engine=engine, n=n, seed=seed)
        return FlowStep(
            step=k, direction=tuple(direction), phi=phi.value, stderr=phi.stderr,
            distance=_distance(current), measures=tuple(float(v) for v in current.measures()),
        ), _slack(current, fibers, peaks)

    first, _ = record(0, (0.0,) * E.d, E, [0] * E.size)
    history = [first]
    violations = []
    slack = 0.0
    stalled_at = -1
    current = E
    for k, direction in enumerate(schedule, start=1):
        sets, fibers = [], []
        for S in current.sets:
            T, count = steiner_set(S, direction)
            sets.append(T)
            fibers.append(count)
        current = SetTuple(sets=sets)
        if not np.array_equal(current.measures(), E.measures()):
            logger.error(f"Measures changed at step {k}")
            raise PropertyViolation(f"flow step {k} did not preserve measures")

        step, step_slack = record(k, _unit(direction, E.d), current, fibers)
        slack = max(slack, step_slack)
        previous = history[-1]
        tolerance = 3 * float(np.hypot(previous.stderr, step.stderr)) + step_slack
        if step.phi < previous.phi - tolerance:
            violations.append(k)
            step = step.model_copy(update={"monotone": False})
            logger.warning(f"Phi dropped at step {k}: {previous.phi:.8g} -> {step.phi:.8g} (tolerance {tolerance:.2g})")
        history.append(step)
        logger.debug(f"Step {k}: phi={step.phi:.8g} distance={step.distance:.6g}")

        if stalled_at < 0 and k >= 10:
            before = history[k - 10].distance
            if step.distance > 0.99 * before and step.distance > 2 * floor:
                stalled_at = k
                logger.warning(f"Flow stalled at step {k}: distance {step.distance:.6g}, floor {floor:.6g}")

    trajectory = FlowTrajectory(
        engine=engine, seed=seed, steps=history, raster_floor=floor, slack=slack,
        stalled=stalled_at >= 0, stalled_at=stalled_at,
        converged=history[-1].distance <= 2 * floor, violations=violations,
    )
    logger.info(f"Flow of {len(schedule)} steps: phi {history[0].phi:.8g} -> {history[-1].phi:.8g}, "
                f"distance {history[0].distance:.6g} -> {history[-1].distance:.6g}, engine={engine}, seed={seed}")
    return trajectory


def assert_monotone(trajectory: FlowTrajectory) -> None:
    if trajectory.violations:
        logger.error(f"Phi decreased at steps {trajectory.violations}")
        raise PropertyViolation(f"Phi decreased beyond error bars at steps {trajectory.violations}")


def flow_start(kind: str, fam: LinearFamily, spec: MeasureSpec, seed: int = None,
               lattice: Lattice = None) -> SetTuple:
    """Starting rasters: centered balls, balls translated along L_j(v), or random blobs"""
    lattice = lattice or settuple_service.default_lattice(spec)
    if kind == "balls":
        return settuple_service.rasterize_tuple(settuple_service.make_ball_tuple(spec), lattice)
    if kind == "translated":
        gen = stream(seed, Purpose.RANDOM_TUPLE, 0)
        v = gen.uniform(-0.2, 0.2, size=(fam.m, spec.d)) * spec.r_max
        shifts = fam.matrix @ v
        sets = [Ellipsoid.ball(float(r), spec.d, center=shifts[j]) for j, r in enumerate(spec.radii)]
        return settuple_service.rasterize_tuple(SetTuple(sets=sets), lattice)
    if kind == "blobs":
        return settuple_service.random_set_tuple(spec, seed=seed, kinds=("grid",), lattice=lattice)
    raise ArgumentError(f"unknown flow start {kind}; choose from balls, translated, blobs")
