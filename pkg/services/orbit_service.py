# services/orbit_service.py

"""
Distance from a tuple to the orbit of the balls under translations and SL(d):

    dist(E, orbit(E*)) = inf over v, psi of max_j |E_j Delta (psi(B_j) + L_j(v))|

psi = exp(M) with M trace-free. Each start runs Nelder-Mead in scaled
coordinates (translations in units of r_max); the objective is max_j with
sum_j as a small tie-break.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Tuple

import numpy as np
from scipy.linalg import expm, logm, sqrtm
from scipy.optimize import minimize

from config import settings
from models.family import LinearFamily
from models.measures import MeasureSpec
from models.orbit import OrbitFit, OrbitStart
from models.sets import Ellipsoid, Grid, SetRepresentation, SetTuple
from services import settuple_service
from services.errors import ArgumentError
from services.rng_service import Purpose, resolve_seed, stream

logger = logging.getLogger("orbit_service")

TIE_FRACTION = 0.01
TIE_WEIGHT = 1e-6
INITIAL_STEP = 0.25


def trace_free(params: np.ndarray, d: int) -> np.ndarray:
    """d*d - 1 parameters -> trace-free matrix (last diagonal entry closes the trace)"""
    M = np.append(params, 0.0).reshape(d, d)
    M[-1, -1] = -np.trace(M[:-1, :-1]) if d > 1 else 0.0
    return M


def trace_free_params(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    M = M - np.trace(M) / d * np.eye(d)
    return M.ravel()[:-1]


def orbit_member(fam: LinearFamily, spec: MeasureSpec, v: np.ndarray, psi: np.ndarray) -> SetTuple:
    """(psi(B_j) + L_j(v))_j"""
    shifts = fam.matrix @ np.asarray(v, dtype=float).reshape(fam.m, spec.d)
    return SetTuple(sets=[
        Ellipsoid(center=shifts[j], shape=psi, radius=float(r)) for j, r in enumerate(spec.radii)
    ])


def _intersection(E: SetRepresentation) -> Callable[[Ellipsoid], float]:
    """|E cap F| for ellipsoids F; grids are counted by occupied cell centers"""
    if isinstance(E, Grid):
        centers = E.cell_centers()
        cell = E.h ** E.d
        return lambda F: cell * float(np.count_nonzero(F.contains(centers)))
    measure = E.measure
    return lambda F: 0.5 * (measure + F.measure - settuple_service.symmetric_difference_measure(E, F))


class _Objective:
    def __init__(self, fam: LinearFamily, E: SetTuple, spec: MeasureSpec):
        self.fam = fam
        self.spec = spec
        self.d = spec.d
        self.measures = E.measures()
        self.overlaps = [_intersection(S) for S in E.sets]
        self.n_v = fam.m * self.d
        self.scale = np.concatenate([np.full(self.n_v, spec.r_max), np.ones(self.d * self.d - 1)])
        self.evaluations = 0

    def split(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        params = z * self.scale
        v = params[:self.n_v].reshape(self.fam.m, self.d)
        psi = expm(trace_free(params[self.n_v:], self.d)) if self.d > 1 else np.eye(1)
        return v, psi

    def join(self, v: np.ndarray, M: np.ndarray) -> np.ndarray:
        params = np.concatenate([np.ravel(v), trace_free_params(M) if self.d > 1 else []])
        return params / self.scale

    def __call__(self, z: np.ndarray) -> Tuple[float, float]:
        self.evaluations += 1
        v, psi = self.split(z)
        member = orbit_member(self.fam, self.spec, v, psi)
        diffs = [
            self.measures[j] + member[j].measure - 2 * self.overlaps[j](member[j])
            for j in range(len(member.sets))
        ]
        return float(max(diffs)), float(sum(diffs))

    def scalar(self, z: np.ndarray) -> float:
        dist, total = self(z)
        return dist + TIE_WEIGHT * total


def local_search(objective: _Objective, z0: np.ndarray, step: float = INITIAL_STEP,
                 stop: float = None) -> Tuple[np.ndarray, Tuple[float, float]]:
    """Nelder-Mead from z0 with an initial simplex of edge `step`"""
    stop = stop or settings.ORBIT_STOP
    z0 = np.asarray(z0, dtype=float)
    simplex = np.vstack([z0, z0 + step * np.eye(len(z0))])
    result = minimize(
        objective.scalar, z0, method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "xatol": stop,
            "fatol": 1e-12 * float(np.max(objective.measures)),
            "maxfev": settings.ORBIT_MAX_EVALUATIONS,
            "adaptive": len(z0) > 4,
        },
    )
    return result.x, objective(result.x)


def moment_start(fam: LinearFamily, E: SetTuple, spec: MeasureSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Least-squares centers for v and the normalized covariance square root for psi"""
    d = spec.d
    moments = [settuple_service.set_moments(S) for S in E.sets]
    centroids = np.array([mo.centroid for mo in moments])
    v, *_ = np.linalg.lstsq(fam.matrix, centroids, rcond=None)
    if d == 1:
        return v, np.zeros((1, 1))
    shape = sum(mo.covariance * (d + 2) / r ** 2 for mo, r in zip(moments, spec.radii)) / len(moments)
    root = np.real(sqrtm(shape))
    det = float(np.linalg.det(root))
    if det <= 0:
        return v, np.zeros((d, d))
    root /= det ** (1.0 / d)
    return v, np.real(logm(root))


def _starts(objective: _Objective, fam: LinearFamily, E: SetTuple, spec: MeasureSpec,
            count: int, seed: int) -> List[Tuple[str, np.ndarray]]:
    d = spec.d
    v0, M0 = moment_start(fam, E, spec)
    starts = [("moments", objective.join(v0, M0)), ("identity", objective.join(np.zeros_like(v0), np.zeros((d, d))))]
    if d == 2:
        starts.append(("quarter-turn", objective.join(v0, M0 + np.array([[0.0, np.pi / 2], [-np.pi / 2, 0.0]]))))
    else:
        starts.append(("reflected", objective.join(-v0, M0)))
    base = starts[0][1]
    k = 0
    while len(starts) < count:
        gen = stream(seed, Purpose.ORBIT_RESTART, k)
        starts.append((f"random-{k}", base + gen.normal(scale=0.1, size=base.shape)))
        k += 1
    return starts[:count]


def dist_to_orbit(fam: LinearFamily, E: SetTuple, spec: MeasureSpec = None, d: int = None,
                  starts: int = None, seed: int = None) -> OrbitFit:
    """
    Multi-start Nelder-Mead search for the orbit distance.

    Raises:
        ArgumentError: If d is not 1 or 2, or the sizes disagree
    """
    spec = spec or settuple_service.measure_spec_of(E)
    d = d or spec.d
    if d not in (1, 2) or E.d != d:
        raise ArgumentError("orbit distances are computed for d=1 and d=2 tuples")
    if E.size != fam.size:
        raise ArgumentError(f"{fam.size} maps but {E.size} sets")
    seed = resolve_seed(seed)
    count = starts or settings.ORBIT_STARTS

    template = _Objective(fam, E, spec)
    initial = _starts(template, fam, E, spec, count, seed)

    def run(item):
        index, (kind, z0) = item
        objective = _Objective(fam, E, spec)
        z, (dist, total) = local_search(objective, z0)
        v, psi = objective.split(z)
        logger.debug(f"Restart {index} ({kind}): distance {dist:.6g} after {objective.evaluations} evaluations")
        return OrbitStart(index=index, kind=kind, distance=dist, total=total, v=v, psi=psi,
                          evaluations=objective.evaluations)

    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        outcomes = list(pool.map(run, enumerate(initial)))

    best = min(outcomes, key=lambda o: (o.distance, o.total))
    tolerance = TIE_FRACTION * best.distance + 1e-12 * float(np.max(spec.e))
    near = [o.index for o in outcomes if o.distance <= best.distance + tolerance]
    distances = np.array([o.distance for o in outcomes])
    fit = OrbitFit(
        distance=best.distance, total=best.total, v=best.v, psi=best.psi, starts=outcomes,
        near_ties=near, spread=float(distances.max() - distances.min()), upper_bound=len(near) < 2,
    )
    if fit.upper_bound:
        logger.warning(f"Only one restart reached distance {best.distance:.6g}; reporting it as an upper bound")
    logger.info(f"Orbit distance {best.distance:.6g} (start {best.index}, {best.kind}), seed={seed}, "
                f"spread {fit.spread:.3g}")
    return fit
