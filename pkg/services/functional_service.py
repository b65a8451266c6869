# services/functional_service.py

"""
Engines for Phi_L(E) = integral over (R^d)^m of prod_j 1_{E_j}(L_j x).

mc     sample the J' coordinates u_j = L_j(x) in the bounding boxes of E_j
exact  d=1, m=2: polygon areas, with unions of intervals expanded multilinearly
fiber  d=2, m=2: integrate the exact d=1 functional of horizontal fibers over
       the second coordinates, by Gauss-Legendre rules placed between the
       points where the fiber structure changes
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence, Tuple

import numpy as np

from config import settings
from models.estimates import DeficitEstimate, LambdaSubspace, MCEstimate, PhiEstimate
from models.family import LinearFamily
from models.measures import MeasureSpec
from models.sets import Ellipsoid, Grid, RadialGraph, SetRepresentation, SetTuple
from services import geometry_service, settuple_service
from services.errors import ArgumentError, ComputationError
from services.family_service import coordinate_chart, lift_points, select_independent_subset
from services.rng_service import Purpose, resolve_seed, stream

logger = logging.getLogger("functional_service")

ENGINES = ("mc", "fiber", "exact")


def _check_sizes(fam: LinearFamily, E: SetTuple) -> None:
    if E.size != fam.size:
        raise ArgumentError(f"{fam.size} maps but {E.size} sets")


def _boxes(sets: Sequence[SetRepresentation]) -> Tuple[np.ndarray, np.ndarray]:
    lows, highs = [], []
    for S in sets:
        lo, hi = S.bbox()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            logger.error("Unbounded set passed to the Monte Carlo engine")
            raise ArgumentError("sets must be bounded")
        lows.append(lo)
        highs.append(hi)
    return np.array(lows), np.array(highs)


def _batch_sizes(n: int) -> List[int]:
    batch = settings.MC_BATCH
    sizes = [batch] * (n // batch)
    if n % batch:
        sizes.append(n % batch)
    return sizes


def _hits(fam, chart, tuples: Sequence[SetTuple], low, high, seed, index, size) -> List[np.ndarray]:
    """Indicator products for every tuple on one batch of shared samples"""
    gen = stream(seed, Purpose.MC_BATCH, index)
    pinned = list(chart.pinned)
    d = low.shape[1]
    U = low[None, :, :] + (high - low)[None, :, :] * gen.uniform(size=(size, len(pinned), d))
    points = lift_points(fam.with_coeffs(chart.rows), U)
    results = []
    for E in tuples:
        hit = np.ones(size, dtype=bool)
        for j in range(fam.size):
            hit &= E[j].contains(points[:, j, :])
        results.append(hit)
    return results


def _run_batches(fam, chart, tuples, low, high, n, seed) -> List[Tuple[float, float]]:
    """Sum and sum of squares of each tuple's indicator (or of their difference for two tuples)"""
    sizes = _batch_sizes(n)

    def work(index):
        hits = _hits(fam, chart, tuples, low, high, seed, index, sizes[index])
        values = hits[0].astype(float) if len(hits) == 1 else hits[1].astype(float) - hits[0].astype(float)
        return float(values.sum()), float((values ** 2).sum())

    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        partial = list(pool.map(work, range(len(sizes))))
    return partial


def eval_phi_mc(fam: LinearFamily, E: SetTuple, n: int = None, seed: int = None) -> MCEstimate:
    """
    Monte Carlo estimate over the J' coordinates.

    Raises:
        ArgumentError: If a set is unbounded or sizes disagree
    """
    _check_sizes(fam, E)
    n = n or settings.MC_SAMPLES
    seed = resolve_seed(seed)
    chart = coordinate_chart(fam)
    pinned = list(chart.pinned)
    d = E.d
    jacobian = chart.jacobian ** d

    if np.any(E.measures() <= 0):
        return MCEstimate(value=0.0, stderr=0.0, n=n, seed=seed, box_volume=0.0)
    low, high = _boxes([E[j] for j in pinned])
    volume = float(np.prod(high - low))

    partial = _run_batches(fam, chart, [E], low, high, n, seed)
    total = sum(p[0] for p in partial)
    mean = total / n
    scale = volume * jacobian
    estimate = MCEstimate(
        value=scale * mean,
        stderr=scale * float(np.sqrt(max(mean - mean ** 2, 0.0) / n)),
        n=n, seed=seed, box_volume=volume,
    )
    logger.info(f"Phi (mc) = {estimate.value:.8g} +/- {estimate.stderr:.2g}, n={n}, seed={seed}")
    return estimate


def eval_phi_mc_paired(fam: LinearFamily, E: SetTuple, F: SetTuple, n: int = None, seed: int = None) -> DeficitEstimate:
    """Phi(F) - Phi(E) on common samples drawn from the union of both boxes"""
    _check_sizes(fam, E)
    _check_sizes(fam, F)
    n = n or settings.MC_SAMPLES
    seed = resolve_seed(seed)
    chart = coordinate_chart(fam)
    pinned = list(chart.pinned)
    jacobian = chart.jacobian ** E.d

    low_e, high_e = _boxes([E[j] for j in pinned])
    low_f, high_f = _boxes([F[j] for j in pinned])
    low, high = np.minimum(low_e, low_f), np.maximum(high_e, high_f)
    volume = float(np.prod(high - low))

    partial = _run_batches(fam, chart, [E, F], low, high, n, seed)
    mean = sum(p[0] for p in partial) / n
    second = sum(p[1] for p in partial) / n
    scale = volume * jacobian
    return DeficitEstimate(
        value=scale * mean,
        stderr=scale * float(np.sqrt(max(second - mean ** 2, 0.0) / n)),
        engine="mc", n=n, seed=seed,
    )


# -- Exact d=1 ------------------------------------------------------------------

def _require_plane(fam: LinearFamily) -> None:
    if fam.m != 2:
        raise ArgumentError("the exact interval engine needs m=2")


def eval_phi_intervals_exact(fam: LinearFamily, intervals: Sequence[Tuple[float, float]]) -> float:
    """Area of {x in R^2 : L_j(x) in I_j for all j}, intervals given as (center, length)"""
    _require_plane(fam)
    if len(intervals) != fam.size:
        raise ArgumentError(f"{fam.size} maps but {len(intervals)} intervals")
    centers = np.array([float(c) for c, _ in intervals])
    lengths = np.array([float(length) for _, length in intervals])
    if np.any(lengths <= 0):
        return 0.0
    return float(geometry_service.slab_polygon(fam.matrix, centers - lengths / 2, centers + lengths / 2).area)


def eval_phi_interval_unions(fam: LinearFamily, unions: Sequence[Sequence[Tuple[float, float]]]) -> float:
    """
    Functional of unions of disjoint intervals, each given as (lo, hi).

    The indicator of a disjoint union is the sum of its pieces, so the
    functional expands into polygon areas over all choices of one piece per index.
    """
    _require_plane(fam)
    if len(unions) != fam.size:
        raise ArgumentError(f"{fam.size} maps but {len(unions)} interval unions")
    if any(len(u) == 0 for u in unions):
        return 0.0
    combos = list(itertools.product(*unions))
    total = 0.0
    chunk = 1 << 14
    for start in range(0, len(combos), chunk):
        block = np.array(combos[start:start + chunk], dtype=float)
        total += float(np.sum(geometry_service.slab_polygon_areas(fam.matrix, block[:, :, 0], block[:, :, 1])))
    return total


def interval_pieces(S: SetRepresentation) -> List[Tuple[float, float]]:
    """A d=1 set as a list of disjoint closed intervals"""
    if S.d != 1:
        raise ArgumentError("interval pieces exist for d=1 sets")
    if isinstance(S, Ellipsoid):
        half = S.radius * abs(float(S.shape[0, 0]))
        return [(float(S.center[0] - half), float(S.center[0] + half))] if half > 0 else []
    if isinstance(S, RadialGraph):
        return [(-float(S.rho[1]), float(S.rho[0]))]
    padded = np.concatenate([[False], S.mask, [False]]).astype(np.int8)
    starts = np.flatnonzero(np.diff(padded) == 1)
    stops = np.flatnonzero(np.diff(padded) == -1)
    o = float(S.origin[0])
    return [(o + a * S.h, o + b * S.h) for a, b in zip(starts, stops)]


def eval_phi_exact(fam: LinearFamily, E: SetTuple) -> float:
    _check_sizes(fam, E)
    if E.d != 1:
        raise ArgumentError("the exact engine handles d=1 tuples")
    value = eval_phi_interval_unions(fam, [interval_pieces(S) for S in E.sets])
    logger.info(f"Phi (exact) = {value!r}")
    return value


# -- Fiber engine, d=2 ------------------------------------------------------------

def _vertical_extent(S: SetRepresentation) -> Tuple[float, float]:
    if isinstance(S, Ellipsoid):
        lo, hi = S.bbox()
        return float(lo[1]), float(hi[1])
    poly = settuple_service._boundary_polygon(S)
    return float(poly[:, 1].min()), float(poly[:, 1].max())


def _sine_rule(a, b, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre in phi after w = mid + half*sin(phi); vectorized over a, b"""
    phi, wphi = geometry_service.composite_gauss_legendre(-np.pi / 2, np.pi / 2, panels, nodes // panels)
    a = np.atleast_1d(a)[:, None]
    b = np.atleast_1d(b)[:, None]
    mid, half = (a + b) / 2, np.maximum(b - a, 0.0) / 2
    return mid + half * np.sin(phi)[None, :], half * (wphi * np.cos(phi))[None, :]


def _fiber_integral(fam: LinearFamily, E: SetTuple, panels: int, nodes: int) -> Tuple[float, int]:
    chart = coordinate_chart(fam)
    rows = chart.rows
    A = fam.matrix
    extents = np.array([_vertical_extent(S) for S in E.sets])

    vertices = geometry_service.polygon_vertices(geometry_service.slab_polygon(rows, extents[:, 0], extents[:, 1]))
    if len(vertices) < 3:
        return 0.0, 0
    breaks = np.unique(np.round(vertices[:, 0], 14))
    free = [i for i in range(fam.size) if abs(rows[i, 1]) > 1e-14]

    total = 0.0
    multi = 0
    for a, b in zip(breaks[:-1], breaks[1:]):
        w0, weight0 = _sine_rule(a, b, panels, nodes)
        w0, weight0 = w0[0], weight0[0]
        # inner range of w1 from every set whose height depends on w1
        bounds = np.stack([
            np.sort(np.stack([(extents[i, 0] - rows[i, 0] * w0) / rows[i, 1],
                              (extents[i, 1] - rows[i, 0] * w0) / rows[i, 1]]), axis=0)
            for i in free
        ])
        lo1, hi1 = bounds[:, 0, :].max(axis=0), bounds[:, 1, :].min(axis=0)
        w1, weight1 = _sine_rule(lo1, np.maximum(hi1, lo1), panels, nodes)

        W0 = np.broadcast_to(w0[:, None], w1.shape)
        heights = rows[:, 0][:, None, None] * W0[None] + rows[:, 1][:, None, None] * w1[None]
        flat = heights.reshape(fam.size, -1)
        lo = np.empty((flat.shape[1], fam.size))
        hi = np.empty_like(lo)
        single = np.ones(flat.shape[1], dtype=bool)
        for j, S in enumerate(E.sets):
            lo[:, j], hi[:, j], ok = settuple_service.horizontal_fibers(S, flat[j])
            single &= ok
        areas = geometry_service.slab_polygon_areas(A, lo, hi)
        for k in np.flatnonzero(~single):
            multi += 1
            unions = [settuple_service.fiber_intervals(S, float(flat[j, k])) for j, S in enumerate(E.sets)]
            areas[k] = eval_phi_interval_unions(fam, unions)
        total += float(np.sum(areas * (weight0[:, None] * weight1).ravel()))
    return total * chart.jacobian, multi


def eval_phi_fiber(fam: LinearFamily, E: SetTuple, nodes: int = None, panels: int = None) -> PhiEstimate:
    """
    Fiber quadrature for d=2, m=2 tuples of ellipsoids and radial graphs.

    The error bar is the change between the full rule and the rule with
    half the nodes per panel.
    """
    _check_sizes(fam, E)
    if E.d != 2 or fam.m != 2:
        raise ArgumentError("the fiber engine handles d=2, m=2")
    if any(isinstance(S, Grid) for S in E.sets):
        raise ArgumentError("the fiber engine needs ellipsoids or radial graphs")
    nodes = nodes or settings.FIBER_NODES
    panels = panels or settings.FIBER_PANELS
    if nodes % panels or (nodes // panels) % 2:
        raise ArgumentError("fiber nodes must split into panels with an even node count each")

    value, multi = _fiber_integral(fam, E, panels, nodes)
    coarse, _ = _fiber_integral(fam, E, panels, nodes // 2)
    if not np.isfinite(value):
        logger.error("Fiber quadrature produced a non-finite value")
        raise ComputationError("fiber quadrature failed")
    if multi:
        logger.warning(f"{multi} quadrature nodes had multi-interval fibers")
    estimate = PhiEstimate(value=value, stderr=abs(value - coarse), engine="fiber", multi_interval_fibers=multi)
    logger.info(f"Phi (fiber) = {value:.12g} +/- {estimate.stderr:.2g}")
    return estimate


# -- Dispatch -------------------------------------------------------------------

def eval_phi(fam: LinearFamily, E: SetTuple, engine: str = "mc", n: int = None, seed: int = None) -> PhiEstimate:
    if engine == "mc":
        mc = eval_phi_mc(fam, E, n=n, seed=seed)
        return PhiEstimate(value=mc.value, stderr=mc.stderr, engine="mc", n=mc.n, seed=mc.seed)
    if engine == "exact":
        return PhiEstimate(value=eval_phi_exact(fam, E), stderr=0.0, engine="exact")
    if engine == "fiber":
        return eval_phi_fiber(fam, E)
    raise ArgumentError(f"unknown engine {engine}; choose from {', '.join(ENGINES)}")


def _measure_tolerance(S: SetRepresentation, target: float) -> float:
    if isinstance(S, Ellipsoid):
        return 1e-9 * target
    if isinstance(S, RadialGraph):
        return 1e-6 * target
    # one layer of boundary cells
    r = (target / (np.pi if S.d == 2 else (4 / 3 * np.pi if S.d == 3 else 2.0))) ** (1.0 / S.d)
    return 2 * S.d * S.h * target / r


def deficit(fam: LinearFamily, E: SetTuple, spec: MeasureSpec, engine: str = "mc",
            n: int = None, seed: int = None) -> DeficitEstimate:
    """
    Phi(E*) - Phi(E).

    Raises:
        ArgumentError: If |E_j| differs from e_j beyond the representation tolerance
    """
    _check_sizes(fam, E)
    measures = E.measures()
    for j, (S, target) in enumerate(zip(E.sets, spec.e)):
        if abs(measures[j] - target) > _measure_tolerance(S, target):
            logger.error(f"Set {j} has measure {measures[j]!r}, expected {target!r}")
            raise ArgumentError(f"set {j} has measure {measures[j]:.8g}, expected {target:.8g}")

    balls = settuple_service.make_ball_tuple(spec)
    if engine == "mc":
        result = eval_phi_mc_paired(fam, E, balls, n=n, seed=seed)
    else:
        star = eval_phi(fam, balls, engine=engine)
        phi = eval_phi(fam, E, engine=engine)
        result = DeficitEstimate(
            value=star.value - phi.value,
            stderr=float(np.hypot(star.stderr, phi.stderr)),
            engine=engine, phi_star=star.value, phi=phi.value,
        )
    logger.info(f"Deficit ({engine}) = {result.value:.8g} +/- {result.stderr:.2g}")
    return result


def lambda_subspace(fam: LinearFamily, d: int = None) -> LambdaSubspace:
    d = fam.dim_d if d is None else d
    pinned, _ = select_independent_subset(fam)
    block = fam.matrix[list(pinned)]
    return LambdaSubspace(
        dimension=fam.m * d,
        m=fam.m,
        d=d,
        coeffs=fam.matrix,
        pinned=pinned,
        normalization=float(abs(np.linalg.det(block)) ** (-d)),
    )
