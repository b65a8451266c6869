# services/settuple_service.py

"""
Building, transforming and measuring set tuples.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.signal import resample

from config import settings
from models.harmonics import HarmonicTuple
from models.measures import MeasureSpec, unit_ball_volume
from models.sets import (
    AngularGrid,
    BoundaryProfile,
    Ellipsoid,
    Grid,
    Lattice,
    NormEquivalence,
    RadialGraph,
    SetMoments,
    SetRepresentation,
    SetTuple,
    TruncationReport,
    ray_measure,
)
from services.errors import ArgumentError, PropertyViolation
from services.rng_service import Purpose, stream

logger = logging.getLogger("settuple_service")


# -- Construction ---------------------------------------------------------------

def make_ball_tuple(spec: MeasureSpec, d: int = None) -> SetTuple:
    """E*: centered balls with |B_j| = e_j"""
    d = spec.d if d is None else d
    if d != spec.d:
        spec = MeasureSpec(e=spec.e, d=d)
    return SetTuple(sets=[Ellipsoid.ball(float(r), d) for r in spec.radii])


def measure_spec_of(E: SetTuple) -> MeasureSpec:
    return MeasureSpec(e=E.measures(), d=E.d)


def radial_from_harmonic(G: HarmonicTuple, s: float, spec: MeasureSpec, n_theta: int = None) -> SetTuple:
    """
    E(s): rho_j^d = r_j^d + d s G_j, so the radial mass added along each ray is s G_j.

    Raises:
        ArgumentError: If the radicand is not positive somewhere
    """
    d = spec.d
    if G.d != d:
        raise ArgumentError(f"harmonic tuple lives in d={G.d}, measures in d={d}")
    if G.size != spec.size:
        raise ArgumentError(f"{G.size} harmonics for {spec.size} measures")
    grid = AngularGrid.build(d, n_theta or settings.ANGULAR_NODES)
    values = G.values(grid.directions)
    sets = []
    for j, r in enumerate(spec.radii):
        radicand = r ** d + d * s * values[j]
        if np.min(radicand) <= 0:
            logger.error(f"s={s} too large for component {j}: min radicand {np.min(radicand):.3g}")
            raise ArgumentError(f"s={s} is too large: the boundary of component {j} reaches the origin")
        sets.append(RadialGraph(d=d, rho=radicand ** (1.0 / d)))
    return SetTuple(sets=sets)


def radial_from_profile(spec: MeasureSpec, profiles: np.ndarray) -> SetTuple:
    """Radial graphs whose boundary profiles F_j are the given samples on the default grid"""
    d = spec.d
    sets = []
    for j, r in enumerate(spec.radii):
        radicand = r ** d + d * profiles[j]
        if np.min(radicand) <= 0:
            raise ArgumentError(f"profile {j} pushes the boundary through the origin")
        sets.append(RadialGraph(d=d, rho=radicand ** (1.0 / d)))
    return SetTuple(sets=sets)


def default_lattice(spec: MeasureSpec, d: int = None) -> Lattice:
    """Cells of size r_max / GRID_CELLS_PER_RADIUS over a centered box of half-width GRID_BOX_FACTOR * r_max"""
    d = spec.d if d is None else d
    r_max = float(np.max(spec.radii))
    h = r_max / settings.GRID_CELLS_PER_RADIUS
    n = int(np.ceil(2 * settings.GRID_BOX_FACTOR * r_max / h))
    n += n % 2
    return Lattice(origin=np.full(d, -n * h / 2), h=h, shape=(n,) * d)


def rasterize(E: SetRepresentation, lattice: Lattice) -> Grid:
    if (isinstance(E, Grid) and E.mask.shape == tuple(lattice.shape) and E.h == lattice.h
            and np.array_equal(E.origin, lattice.origin)):
        return E
    mask = E.contains(lattice.centers()).reshape(lattice.shape)
    return Grid(mask=mask, h=lattice.h, origin=lattice.origin)


def rasterize_tuple(E: SetTuple, lattice: Lattice) -> SetTuple:
    return SetTuple(sets=[rasterize(s, lattice) for s in E.sets])


def random_sl_matrix(gen: np.random.Generator, d: int, scale: float) -> np.ndarray:
    M = gen.normal(scale=scale, size=(d, d))
    M -= np.trace(M) / d * np.eye(d)
    return expm(M)


def _random_ellipsoid(gen, r: float, d: int) -> Ellipsoid:
    shape = random_sl_matrix(gen, d, 0.25) if d > 1 else np.eye(1)
    center = gen.uniform(-0.5, 0.5, size=d) * r
    return Ellipsoid(center=center, shape=shape, radius=r)


def _random_radial(gen, r: float, d: int) -> RadialGraph:
    if d == 1:
        rho = r * gen.uniform(0.5, 1.5, size=2)
        return RadialGraph(d=1, rho=rho * (2 * r / rho.sum()))
    grid = AngularGrid.build(d, settings.ANGULAR_NODES // 4)
    if d == 2:
        theta = grid.angles
        bump = sum(gen.uniform(-0.15, 0.15) / k * np.cos(k * theta) + gen.uniform(-0.15, 0.15) / k * np.sin(k * theta)
                   for k in range(1, 6))
    else:
        bump = grid.directions @ gen.uniform(-0.1, 0.1, size=3)
    rho = r * (1 + bump)
    target = unit_ball_volume(d) * r ** d
    measure = grid.integrate(rho ** d / d)
    return RadialGraph(d=d, rho=rho * (target / measure) ** (1.0 / d))


def _random_blob(gen, r: float, lattice: Lattice) -> Grid:
    d = lattice.d
    centers = gen.uniform(-0.4, 0.4, size=(3, d)) * r
    radii = r * gen.uniform(0.4, 0.8, size=3)
    points = lattice.centers()
    inside = np.zeros(len(points), dtype=bool)
    for c, rad in zip(centers, radii):
        inside |= np.sum((points - c) ** 2, axis=1) <= rad ** 2
    return Grid(mask=inside.reshape(lattice.shape), h=lattice.h, origin=lattice.origin)


def random_set_tuple(spec: MeasureSpec, seed: int = None, index: int = 0,
                     kinds: Sequence[str] = ("ellipsoid", "radial", "grid"),
                     lattice: Lattice = None) -> SetTuple:
    """
    A seeded tuple of mixed representations near the balls of `spec`.

    Ellipsoids and radial graphs carry the measures e_j exactly; grid blobs
    (unions of random balls) do not, so compare against measure_spec_of(E).
    """
    gen = stream(seed, Purpose.RANDOM_TUPLE, index)
    d = spec.d
    if d > 2:
        kinds = [k for k in kinds if k != "grid"] or ["ellipsoid"]
    lattice = lattice or default_lattice(spec)
    sets = []
    for r in spec.radii:
        kind = kinds[int(gen.integers(len(kinds)))]
        if kind == "ellipsoid":
            sets.append(_random_ellipsoid(gen, float(r), d))
        elif kind == "radial":
            sets.append(_random_radial(gen, float(r), d))
        elif kind == "grid":
            sets.append(_random_blob(gen, float(r), lattice))
        else:
            raise ArgumentError(f"unknown set kind {kind}")
    return SetTuple(sets=sets)


# -- Transforms -----------------------------------------------------------------

def translate_set(E: SetRepresentation, v) -> SetRepresentation:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if isinstance(E, Ellipsoid):
        return Ellipsoid(center=E.center + v, shape=E.shape, radius=E.radius)
    if isinstance(E, Grid):
        return Grid(mask=E.mask, h=E.h, origin=E.origin + v)
    raise ArgumentError("radial graphs are not closed under translation; rasterize first")


def linear_image(E: SetRepresentation, A) -> SetRepresentation:
    """A(E) for invertible A; grids are resampled on a lattice covering the image"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if abs(np.linalg.det(A)) < 1e-14:
        raise ArgumentError("linear image needs an invertible matrix")
    if isinstance(E, Ellipsoid):
        return Ellipsoid(center=A @ E.center, shape=A @ E.shape, radius=E.radius)
    inv = np.linalg.inv(A)
    if isinstance(E, RadialGraph):
        directions = E.grid.directions
        pre = directions @ inv.T
        length = np.linalg.norm(pre, axis=1)
        return RadialGraph(d=E.d, rho=E.radius_at(pre / length[:, None]) / length)
    lo, hi = E.bbox()
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(E.d, -1).T @ A.T
    low = corners.min(axis=0) - E.h
    n = np.ceil((corners.max(axis=0) + E.h - low) / E.h).astype(int)
    lattice = Lattice(origin=low, h=E.h, shape=tuple(int(k) for k in n))
    mask = E.contains(lattice.centers() @ inv.T).reshape(lattice.shape)
    return Grid(mask=mask, h=E.h, origin=low)


def dilate_set(E: SetRepresentation, factor: float) -> SetRepresentation:
    if factor <= 0:
        raise ArgumentError("dilation factor must be positive")
    if isinstance(E, Ellipsoid):
        return Ellipsoid(center=E.center * factor, shape=E.shape, radius=E.radius * factor)
    if isinstance(E, RadialGraph):
        return RadialGraph(d=E.d, rho=E.rho * factor)
    return Grid(mask=E.mask, h=E.h * factor, origin=E.origin * factor)


def set_moments(E: SetRepresentation) -> SetMoments:
    """Measure, centroid and covariance of the uniform distribution on E"""
    d = E.d
    if isinstance(E, Ellipsoid):
        cov = E.radius ** 2 / (d + 2) * E.shape @ E.shape.T
        return SetMoments(measure=E.measure, centroid=E.center.copy(), covariance=cov)
    if isinstance(E, RadialGraph):
        grid = E.grid
        w = grid.weights
        u = grid.directions
        mass = E.measure
        first = (w * E.rho ** (d + 1) / (d + 1)) @ u
        second = np.einsum("n,nd,ne->de", w * E.rho ** (d + 2) / (d + 2), u, u)
        centroid = first / mass
        return SetMoments(measure=mass, centroid=centroid, covariance=second / mass - np.outer(centroid, centroid))
    points = E.cell_centers()
    if len(points) == 0:
        return SetMoments(measure=0.0, centroid=np.zeros(d), covariance=np.zeros((d, d)))
    centroid = points.mean(axis=0)
    cov = np.cov(points.T, bias=True).reshape(d, d) + E.h ** 2 / 12 * np.eye(d)
    return SetMoments(measure=E.measure, centroid=centroid, covariance=cov)


# -- Serialization --------------------------------------------------------------

def encode_grid(grid: Grid) -> str:
    """Header line then run lengths of the flattened mask, starting with an empty run"""
    flat = grid.mask.ravel().astype(np.int8)
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs = [0] + runs
    header = (f"# grid h={repr(grid.h)} origin={' '.join(repr(float(v)) for v in grid.origin)} "
              f"shape={' '.join(str(n) for n in grid.mask.shape)}")
    return header + "\n" + " ".join(str(r) for r in runs) + "\n"


def decode_grid(text: str) -> Grid:
    lines = text.strip().splitlines()
    if len(lines) < 1 or not lines[0].startswith("# grid "):
        raise ArgumentError("not a run-length encoded grid")
    fields = {}
    for part in lines[0][len("# grid "):].split(" "):
        if "=" in part:
            key, value = part.split("=", 1)
            fields[key] = [value]
        else:
            fields[key].append(part)
    h = float(fields["h"][0])
    origin = np.array([float(v) for v in fields["origin"]])
    shape = tuple(int(v) for v in fields["shape"])
    runs = [int(v) for v in lines[1].split()] if len(lines) > 1 else []
    values = np.repeat(np.arange(len(runs)) % 2 == 1, runs)
    if values.size != int(np.prod(shape)):
        raise ArgumentError(f"run lengths cover {values.size} cells, shape needs {int(np.prod(shape))}")
    return Grid(mask=values.reshape(shape), h=h, origin=origin)


def radial_table(E: RadialGraph) -> str:
    """(theta, boundary radius) rows for a d=2 radial graph"""
    if E.d != 2:
        raise ArgumentError("radial tables are written for d=2")
    return "".join(f"{repr(float(t))} {repr(float(r))}\n" for t, r in zip(E.grid.angles, E.rho))


# -- Profiles and symmetric differences -------------------------------------------

def _ray_intervals_sampled(E: Grid, directions: np.ndarray, reach: float) -> Tuple[np.ndarray, np.ndarray]:
    """Membership along rays at quarter-cell spacing; returns (t, inside) with inside of shape (N, T)"""
    dt = E.h / 4
    t = (np.arange(int(np.ceil(reach / dt))) + 0.5) * dt
    points = directions[:, None, :] * t[None, :, None]
    inside = E.contains(points.reshape(-1, E.d)).reshape(len(directions), len(t))
    return t, inside


def _grid_reach(E: Grid, r: float) -> float:
    lo, hi = E.bbox()
    return max(float(np.max(np.abs(np.concatenate([lo, hi])))) * np.sqrt(E.d), r) + E.h


def profile_grid(E: SetRepresentation, n_theta: int = None) -> AngularGrid:
    if isinstance(E, RadialGraph):
        return E.grid
    return AngularGrid.build(E.d, n_theta or settings.ANGULAR_NODES)


def boundary_profile(E: SetRepresentation, r: float, index: int = 0, n_theta: int = None) -> BoundaryProfile:
    """F^+ and F^- of one set against the centered ball of radius r"""
    grid = profile_grid(E, n_theta)
    d = E.d
    if isinstance(E, Grid):
        t, inside = _ray_intervals_sampled(E, grid.directions, _grid_reach(E, r))
        weight = t ** (d - 1) * (E.h / 4)
        in_ball = t <= r
        f_plus = (inside & ~in_ball[None, :]) @ weight
        f_minus = (~inside & in_ball[None, :]) @ weight
    else:
        lo, hi = E.ray_intervals(grid.directions)
        f_plus = ray_measure(np.maximum(lo, r), hi, d)
        # empty rays come back as lo = hi = 0, which leaves the whole segment [0, r]
        f_minus = ray_measure(np.zeros_like(lo), np.minimum(lo, r), d) + ray_measure(hi, np.full_like(hi, r), d)
    return BoundaryProfile(index=index, grid=grid, f_plus=f_plus, f_minus=f_minus)


def boundary_profiles(E: SetTuple, spec: MeasureSpec, n_theta: int = None) -> List[BoundaryProfile]:
    return [boundary_profile(E[j], float(r), j, n_theta) for j, r in enumerate(spec.radii)]


def symmetric_difference_measure(A: SetRepresentation, B: SetRepresentation, n_theta: int = None) -> float:
    """
    |A Delta B|.

    Grids are compared cell by cell on a common lattice (the other set is
    rasterized onto it). Ellipsoids and radial graphs are compared ray by ray,
    exactly along each ray and by angular quadrature across rays.
    """
    if A.d != B.d:
        raise ArgumentError("sets live in different dimensions")
    if isinstance(A, Grid) and isinstance(B, Grid):
        if not A.same_lattice(B):
            lattice = _covering_lattice(A, B)
            A, B = rasterize(A, lattice), rasterize(B, lattice)
        return float(np.count_nonzero(A.mask ^ B.mask)) * A.h ** A.d
    if isinstance(A, Grid) or isinstance(B, Grid):
        grid, other = (A, B) if isinstance(A, Grid) else (B, A)
        lattice = Lattice(origin=grid.origin, h=grid.h, shape=grid.mask.shape)
        if _spills(other, lattice):
            logger.warning("Set extends beyond the raster; symmetric difference undercounts")
        return float(np.count_nonzero(grid.mask ^ rasterize(other, lattice).mask)) * grid.h ** grid.d

    grids = [s.grid for s in (A, B) if isinstance(s, RadialGraph)]
    grid = max(grids, key=lambda g: g.size) if grids else AngularGrid.build(A.d, n_theta or settings.ANGULAR_NODES)
    lo_a, hi_a = A.ray_intervals(grid.directions)
    lo_b, hi_b = B.ray_intervals(grid.directions)
    d = A.d
    seg_a = ray_measure(lo_a, hi_a, d)
    seg_b = ray_measure(lo_b, hi_b, d)
    seg_ab = ray_measure(np.maximum(lo_a, lo_b), np.minimum(hi_a, hi_b), d)
    return grid.integrate(seg_a + seg_b - 2 * seg_ab)


def _covering_lattice(a: Grid, b: Grid) -> Lattice:
    h = min(a.h, b.h)
    lo = np.minimum(a.origin, b.origin)
    hi = np.maximum(a.origin + np.array(a.mask.shape) * a.h, b.origin + np.array(b.mask.shape) * b.h)
    shape = tuple(int(n) for n in np.ceil((hi - lo) / h))
    return Lattice(origin=lo, h=h, shape=shape)


def _spills(other: SetRepresentation, lattice: Lattice) -> bool:
    lo, hi = other.bbox()
    top = lattice.origin + np.array(lattice.shape) * lattice.h
    return bool(np.any(lo < lattice.origin) or np.any(hi > top))


def distance_to_balls(E: SetTuple, spec: MeasureSpec) -> np.ndarray:
    """|E_j Delta B_j| for every j"""
    balls = make_ball_tuple(spec)
    return np.array([symmetric_difference_measure(E[j], balls[j]) for j in range(E.size)])


def profile_norm_equivalence(tuples: Sequence[SetTuple], spec: MeasureSpec) -> NormEquivalence:
    """Observed constants in |F^+|^2 + |F^-|^2 ~ |E_j Delta B_j|^2"""
    ratios = []
    for E in tuples:
        profiles = boundary_profiles(E, spec)
        distances = distance_to_balls(E, spec)
        for profile, dist in zip(profiles, distances):
            if dist > 0:
                ratios.append(profile.l2_norm_squared() / dist ** 2)
    ratios = np.array(ratios)
    if ratios.size == 0:
        raise ArgumentError("all tuples coincide with the balls")
    logger.info(f"Profile norm equivalence over {ratios.size} components: [{ratios.min():.4g}, {ratios.max():.4g}]")
    return NormEquivalence(lower=float(ratios.min()), upper=float(ratios.max()), ratios=ratios)


# -- Fibers -----------------------------------------------------------------------

def _boundary_polygon(E: RadialGraph, upsample: int = 8) -> np.ndarray:
    rho = resample(E.rho, upsample * len(E.rho))
    theta = 2 * np.pi * np.arange(len(rho)) / len(rho)
    return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])


def fiber_intervals(E: SetRepresentation, w: float) -> List[Tuple[float, float]]:
    """All intervals of {t : (t, w) in E} for a d=2 set, by edge crossings"""
    if isinstance(E, Ellipsoid):
        lo, hi, ok = E.horizontal_fibers(np.array([w]))
        return [(float(lo[0]), float(hi[0]))] if ok[0] else []
    if not isinstance(E, RadialGraph):
        raise ArgumentError("fibers are computed for ellipsoids and radial graphs")
    poly = _boundary_polygon(E)
    p, q = poly, np.roll(poly, -1, axis=0)
    crosses = ((p[:, 1] <= w) & (q[:, 1] > w)) | ((q[:, 1] <= w) & (p[:, 1] > w))
    a, b = p[crosses], q[crosses]
    xs = np.sort(a[:, 0] + (w - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1]))
    return [(float(xs[k]), float(xs[k + 1])) for k in range(0, len(xs) - 1, 2)]


def horizontal_fibers(E: SetRepresentation, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Fibers {t : (t, w) in E} of a d=2 set for many heights.

    Returns:
        (lo, hi, single): hull of each fiber, and whether it is one interval
        (empty fibers have lo = hi = 0 and count as single)
    """
    w = np.asarray(w, dtype=float)
    if isinstance(E, Ellipsoid):
        lo, hi, ok = E.horizontal_fibers(w)
        return np.where(ok, lo, 0.0), np.where(ok, hi, 0.0), np.ones(len(w), dtype=bool)
    if not isinstance(E, RadialGraph) or E.d != 2:
        raise ArgumentError("fibers are computed for d=2 ellipsoids and radial graphs")

    poly = _boundary_polygon(E)
    y = poly[:, 1]
    bottom, top = int(np.argmin(y)), int(np.argmax(y))
    n = len(poly)
    right = poly[[(bottom + k) % n for k in range((top - bottom) % n + 1)]]
    left = poly[[(top + k) % n for k in range((bottom - top) % n + 1)]]
    monotone = np.all(np.diff(right[:, 1]) > 0) and np.all(np.diff(left[:, 1]) < 0)

    inside = (w >= y[bottom]) & (w <= y[top])
    if monotone:
        x_right = np.interp(w, right[:, 1], right[:, 0])
        x_left = np.interp(w, left[::-1, 1], left[::-1, 0])
        return np.where(inside, x_left, 0.0), np.where(inside, x_right, 0.0), np.ones(len(w), dtype=bool)

    lo = np.zeros(len(w))
    hi = np.zeros(len(w))
    single = np.ones(len(w), dtype=bool)
    for k, wk in enumerate(w):
        pieces = fiber_intervals(E, float(wk))
        if pieces:
            lo[k], hi[k] = pieces[0][0], pieces[-1][1]
            single[k] = len(pieces) == 1
    if not np.all(single):
        logger.warning(f"{np.count_nonzero(~single)} of {len(w)} fibers have several intervals")
    return lo, hi, single


# -- Truncation -------------------------------------------------------------------

def _truncate_one(E: Grid, r: float, width: float, index: int) -> Tuple[Grid, TruncationReport]:
    centers = E.cell_centers(occupied_only=False)
    norms = np.linalg.norm(centers, axis=1).reshape(E.mask.shape)
    ball = norms <= r
    mask = E.mask
    diff = mask ^ ball

    widenings = 0
    while True:
        annulus = np.abs(norms - r) <= width
        far = diff & ~annulus
        surplus = int(np.count_nonzero(far & mask)) - int(np.count_nonzero(far & ball))
        # refill missing ball cells innermost first, or drop extra cells outermost first
        if surplus > 0:
            candidates = np.flatnonzero((ball & ~mask & annulus).ravel())
            order = np.argsort(norms.ravel()[candidates], kind="stable")
        else:
            candidates = np.flatnonzero((mask & ~ball & annulus).ravel())
            order = np.argsort(-norms.ravel()[candidates], kind="stable")
        if len(candidates) >= abs(surplus):
            break
        widenings += 1
        width *= 1.5
        logger.warning(f"Annulus for component {index} too thin to rebalance {abs(surplus)} cells; widening to {width:.4g}")

    result = np.where(annulus, mask, ball).ravel()
    reverted = candidates[order[:abs(surplus)]]
    result[reverted] = surplus > 0
    result = result.reshape(mask.shape)
    truncated = E.with_mask(result)

    far_cells = int(np.count_nonzero(far))
    _assert_truncation(E, truncated, ball, annulus, far_cells, index)
    report = TruncationReport(
        index=index, width=width, widenings=widenings,
        far_cells=far_cells, reverted_cells=int(len(reverted)), measure=truncated.measure,
    )
    return truncated, report


def _assert_truncation(E: Grid, T: Grid, ball: np.ndarray, annulus: np.ndarray, far_cells: int, index: int) -> None:
    e_diff = E.mask ^ ball
    t_diff = T.mask ^ ball
    moved = E.mask ^ T.mask
    checks = {
        "measure equality": np.count_nonzero(E.mask) == np.count_nonzero(T.mask),
        "disjoint union": not np.any(t_diff & moved) and np.array_equal(t_diff | moved, e_diff),
        "annulus containment": not np.any(t_diff & ~(e_diff & annulus)),
        "displacement bound": np.count_nonzero(moved) <= 2 * far_cells,
    }
    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        logger.error(f"Truncation of component {index} violates {failed}")
        raise PropertyViolation(f"annulus truncation of component {index} violates {', '.join(failed)}")


def truncate_to_annulus(E: SetTuple, spec: MeasureSpec, width: float,
                        lattice: Lattice = None) -> Tuple[SetTuple, List[TruncationReport]]:
    """
    E^dagger: agree with B_j outside the annulus ||x| - r_j| <= width and with
    E_j inside it, except for a rebalancing set that restores |E_j|.

    Raises:
        ArgumentError: If width is not positive or a set is an ellipsoid
        PropertyViolation: If a truncation property fails
    """
    if width <= 0:
        raise ArgumentError("annulus width must be positive")
    lattice = lattice or default_lattice(spec)
    sets, reports = [], []
    for j, r in enumerate(spec.radii):
        Ej = E[j]
        if isinstance(Ej, Ellipsoid):
            raise ArgumentError("truncation takes grid or radial graph sets")
        grid = Ej if isinstance(Ej, Grid) else rasterize(Ej, lattice)
        truncated, report = _truncate_one(grid, float(r), width, j)
        sets.append(truncated)
        reports.append(report)
    logger.info(f"Truncated {E.size} sets to annulus width {width:.4g}; "
                f"reverted cells {[rep.reverted_cells for rep in reports]}")
    return SetTuple(sets=sets), reports
