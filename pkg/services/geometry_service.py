# services/geometry_service.py

"""
Shared computational geometry: small LPs over slab polytopes, slab polygons as
shapely geometries, disk and ball intersections, and composite
Gauss-Legendre rules.
"""

import itertools
import logging
from typing import Optional, Tuple

import numpy as np
import shapely
from scipy.integrate import quad
from scipy.optimize import linprog
from shapely.geometry import Polygon

from services.errors import ComputationError, StructuralError

logger = logging.getLogger("geometry_service")

ABS_TOL = 1e-12


# -- Linear programming -------------------------------------------------------

def lp_maximize(objective, A_ub, b_ub, A_eq=None, b_eq=None, bounds=None):
    """
    Maximize objective . z subject to A_ub z <= b_ub and A_eq z = b_eq.

    Returns:
        (optimal value, optimal point), or (None, None) when infeasible

    Raises:
        StructuralError: If the LP is unbounded
        ComputationError: If the solver fails for any other reason
    """
    n = len(objective)
    if bounds is None:
        bounds = [(None, None)] * n
    result = linprog(
        -np.asarray(objective, dtype=float),
        A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=bounds, method="highs",
    )
    if result.status == 2:
        return None, None
    if result.status == 3:
        logger.error("LP unbounded: the slab polytope is not bounded")
        raise StructuralError("unbounded polytope")
    if result.status != 0:
        logger.error(f"LP failed: {result.message}")
        raise ComputationError(f"LP solver failed: {result.message}")
    return -float(result.fun), np.asarray(result.x)


def slab_constraints(rows: np.ndarray, bounds: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """|rows x| <= bounds as stacked half-spaces"""
    return np.vstack([rows, -rows]), np.concatenate([bounds, bounds])


def slab_extent(direction: np.ndarray, rows: np.ndarray, bounds: np.ndarray) -> float:
    """max direction . x over {x : |rows x| <= bounds}"""
    A_ub, b_ub = slab_constraints(rows, bounds)
    value, _ = lp_maximize(direction, A_ub, b_ub)
    if value is None:
        raise StructuralError("empty slab polytope")
    return value


def slab_box(rows: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Half-widths of the coordinate box enclosing {x : |rows x| <= bounds} (centrally symmetric)"""
    m = rows.shape[1]
    return np.array([slab_extent(np.eye(m)[k], rows, bounds) for k in range(m)])


# -- Polygons -------------------------------------------------------------------

def _first_independent_pair(rows: np.ndarray) -> Optional[Tuple[int, int]]:
    for a, b in itertools.combinations(range(len(rows)), 2):
        det = rows[a, 0] * rows[b, 1] - rows[a, 1] * rows[b, 0]
        scale = np.linalg.norm(rows[a]) * np.linalg.norm(rows[b])
        if abs(det) > 1e-12 * scale:
            return a, b
    return None


def _strips(normal: np.ndarray, lo: np.ndarray, hi: np.ndarray, reach: np.ndarray) -> np.ndarray:
    """{x : lo <= normal . x <= hi} cut to |x . normal_perp| <= reach, as (N, 4, 2) corners"""
    norm = np.linalg.norm(normal)
    along = normal / norm ** 2
    across = np.array([-normal[1], normal[0]]) / norm
    near = lo[:, None] * along[None, :]
    far = hi[:, None] * along[None, :]
    side = reach[:, None] * across[None, :]
    return np.stack([near - side, far - side, far + side, near + side], axis=1)


def slab_polygons(rows: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """
    Shapely polygons {x in R^2 : lo_j <= rows_j . x <= hi_j for all j}, one per row of lo/hi.

    The first two independent rows give a parallelogram; every other row
    intersects it with a strip.

    Args:
        rows: (J, 2) slab normals
        lo, hi: (J,) or (N, J) slab bounds

    Returns:
        (N,) array of geometries; empty or flat slabs give empty polygons

    Raises:
        StructuralError: If no two rows are independent
    """
    lo = np.atleast_2d(np.asarray(lo, dtype=float))
    hi = np.atleast_2d(np.asarray(hi, dtype=float))
    pair = _first_independent_pair(rows)
    if pair is None:
        raise StructuralError("slab polygon needs two non-parallel rows")
    flat = np.any(hi <= lo, axis=1)
    lo = np.where(flat[:, None], 0.0, lo)
    hi = np.where(flat[:, None], 1.0, hi)
    a, b = pair
    inv = np.linalg.inv(rows[[a, b]])
    corners = np.stack([
        np.column_stack([lo[:, a], lo[:, b]]),
        np.column_stack([hi[:, a], lo[:, b]]),
        np.column_stack([hi[:, a], hi[:, b]]),
        np.column_stack([lo[:, a], hi[:, b]]),
    ], axis=1) @ inv.T
    regions = shapely.polygons(corners)
    reach = 2.0 * np.max(np.linalg.norm(corners, axis=2), axis=1) + 1.0
    for j in range(len(rows)):
        if j in pair:
            continue
        regions = shapely.intersection(regions, shapely.polygons(_strips(rows[j], lo[:, j], hi[:, j], reach)))
    regions[flat] = Polygon()
    return regions


def slab_polygon(rows: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """The single slab polygon for bounds lo, hi of shape (J,)"""
    return slab_polygons(rows, lo, hi)[0]


def slab_polygon_areas(rows: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """(N,) areas of the slab polygons for (N, J) bounds"""
    return shapely.area(slab_polygons(rows, lo, hi))


def polygon_vertices(region) -> np.ndarray:
    """Exterior vertices (k, 2) of a polygon, without the closing point; degenerate regions give none"""
    if region.is_empty or region.geom_type != "Polygon" or region.area <= 0:
        return np.empty((0, 2))
    return np.asarray(region.exterior.coords)[:-1]


# -- Disks and balls -------------------------------------------------------------

def lens_area(r1, r2, t):
    """Area of the intersection of two disks with radii r1, r2 at center distance t"""
    r1, r2, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, r2, t)))
    t = np.abs(t)
    result = np.zeros(np.shape(t))
    nested = t <= np.abs(r1 - r2)
    result = np.where(nested, np.pi * np.minimum(r1, r2) ** 2, result)
    partial = (~nested) & (t < r1 + r2)
    ts = np.where(partial, t, 1.0)
    c1 = np.clip((ts ** 2 + r1 ** 2 - r2 ** 2) / (2 * ts * np.where(partial, r1, 1.0)), -1, 1)
    c2 = np.clip((ts ** 2 + r2 ** 2 - r1 ** 2) / (2 * ts * np.where(partial, r2, 1.0)), -1, 1)
    kite = (-ts + r1 + r2) * (ts + r1 - r2) * (ts - r1 + r2) * (ts + r1 + r2)
    area = r1 ** 2 * np.arccos(c1) + r2 ** 2 * np.arccos(c2) - 0.5 * np.sqrt(np.maximum(kite, 0.0))
    result = np.where(partial, area, result)
    return result if result.ndim else float(result)


def ball_pair_volume(d: int, r1, r2, t):
    """Measure of B(0, r1) intersected with B(t e_1, r2) in R^d, d in 1..3"""
    if d == 2:
        return lens_area(r1, r2, t)
    r1, r2, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (r1, r2, t)))
    t = np.abs(t)
    if d == 1:
        result = np.maximum(0.0, np.minimum(r1, t + r2) - np.maximum(-r1, t - r2))
    elif d == 3:
        nested = t <= np.abs(r1 - r2)
        partial = (~nested) & (t < r1 + r2)
        ts = np.where(partial, t, 1.0)
        cap = np.pi * (r1 + r2 - ts) ** 2 * (ts ** 2 + 2 * ts * (r1 + r2) - 3 * (r1 - r2) ** 2) / (12 * ts)
        result = np.where(nested, 4.0 / 3.0 * np.pi * np.minimum(r1, r2) ** 3, np.where(partial, cap, 0.0))
    else:
        raise ValueError(f"ball intersections are implemented for d in 1..3, got {d}")
    return result if result.ndim else float(result)


def _circle_crossings(c1, r1, c2, r2):
    delta = c2 - c1
    dist = float(np.linalg.norm(delta))
    if dist == 0 or dist >= r1 + r2 or dist <= abs(r1 - r2):
        return []
    a = (r1 ** 2 - r2 ** 2 + dist ** 2) / (2 * dist)
    height = np.sqrt(max(r1 ** 2 - a ** 2, 0.0))
    mid = c1 + a * delta / dist
    perp = np.array([-delta[1], delta[0]]) / dist
    return [mid + height * perp, mid - height * perp]


def disk_intersection_area(centers: np.ndarray, radii: np.ndarray) -> float:
    """Area of the intersection of several disks (exact for two, adaptive chord quadrature otherwise)"""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 1:
        return float(np.pi * radii[0] ** 2)
    if len(radii) == 2:
        return float(lens_area(radii[0], radii[1], np.linalg.norm(centers[1] - centers[0])))

    left = float(np.max(centers[:, 0] - radii))
    right = float(np.min(centers[:, 0] + radii))
    if left >= right:
        return 0.0

    def chord(x):
        half = np.sqrt(np.maximum(radii ** 2 - (x - centers[:, 0]) ** 2, 0.0))
        return max(0.0, float(np.min(centers[:, 1] + half) - np.max(centers[:, 1] - half)))

    breaks = set(np.concatenate([centers[:, 0] - radii, centers[:, 0] + radii]).tolist())
    for a, b in itertools.combinations(range(len(radii)), 2):
        for point in _circle_crossings(centers[a], radii[a], centers[b], radii[b]):
            breaks.add(float(point[0]))
    interior = sorted(x for x in breaks if left < x < right)
    value, _ = quad(chord, left, right, points=interior or None, limit=200, epsabs=1e-13, epsrel=1e-11)
    return float(value)


def ball_intersection_measure(d: int, centers: np.ndarray, radii: np.ndarray) -> Optional[float]:
    """Measure of an intersection of balls, or None when no exact rule applies"""
    centers = np.asarray(centers, dtype=float).reshape(len(radii), d)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0):
        return 0.0
    if d == 1:
        return float(max(0.0, np.min(centers[:, 0] + radii) - np.max(centers[:, 0] - radii)))
    if d == 2:
        return disk_intersection_area(centers, radii)
    if len(radii) == 1:
        return float(ball_pair_volume(d, radii[0], radii[0], 0.0))
    if len(radii) == 2:
        return float(ball_pair_volume(d, radii[0], radii[1], np.linalg.norm(centers[1] - centers[0])))
    return None


# -- Quadrature -----------------------------------------------------------------

def composite_gauss_legendre(a: float, b: float, panels: int, nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]"""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    points = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return points, weights
