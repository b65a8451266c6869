# models/sets.py

"""
Set representations: ellipsoids, star-shaped radial graphs and raster grids.

Every representation answers membership queries for batches of points,
reports its measure and a bounding box. Ellipsoids and radial graphs also
expose the interval they cut out of each ray from the origin, which makes
boundary profiles and symmetric differences exact up to angular quadrature.
"""

from typing import Annotated, List, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from models.measures import unit_ball_volume


def _array(value, ndim: int = None) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected an array with {ndim} dimensions, got shape {arr.shape}")
    return arr


class AngularGrid(BaseModel):
    """Quadrature nodes on S^{d-1}; weights sum to the sphere area.

    d=1 uses the two points {+1, -1}, d=2 equispaced angles, d=3 a product
    rule (Gauss-Legendre in cos(polar angle) times equispaced azimuth).
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    d: int
    directions: np.ndarray
    weights: np.ndarray
    shape: Tuple[int, ...]

    @classmethod
    def build(cls, d: int, n: int) -> "AngularGrid":
        if d == 1:
            return cls(d=1, directions=np.array([[1.0], [-1.0]]), weights=np.ones(2), shape=(2,))
        if d == 2:
            theta = 2 * np.pi * np.arange(n) / n
            directions = np.column_stack([np.cos(theta), np.sin(theta)])
            return cls(d=2, directions=directions, weights=np.full(n, 2 * np.pi / n), shape=(n,))
        if d == 3:
            n_z = max(4, int(np.ceil(np.sqrt(n / 2))))
            n_phi = 2 * n_z
            z, wz = np.polynomial.legendre.leggauss(n_z)
            phi = 2 * np.pi * np.arange(n_phi) / n_phi
            Z, PHI = np.meshgrid(z, phi, indexing="ij")
            s = np.sqrt(1 - Z ** 2)
            directions = np.column_stack([(s * np.cos(PHI)).ravel(), (s * np.sin(PHI)).ravel(), Z.ravel()])
            weights = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
            return cls(d=3, directions=directions, weights=weights, shape=(n_z, n_phi))
        raise ValueError(f"angular grids exist for d in 1..3, got {d}")

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def angles(self) -> np.ndarray:
        """Polar angles of a d=2 grid"""
        return np.arctan2(self.directions[:, 1], self.directions[:, 0]) % (2 * np.pi)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


def ray_measure(lo: np.ndarray, hi: np.ndarray, d: int) -> np.ndarray:
    """integral of t^{d-1} dt over [lo, hi] (zero when empty)"""
    lo = np.maximum(lo, 0.0)
    hi = np.maximum(hi, lo)
    return (hi ** d - lo ** d) / d


class Ellipsoid(BaseModel):
    """{x : |shape^{-1}(x - center)| <= radius}"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["ellipsoid"] = "ellipsoid"
    center: np.ndarray
    shape: np.ndarray
    radius: float

    @field_validator("center", mode="before")
    @classmethod
    def _center(cls, value):
        return _array(value, 1)

    @field_validator("shape", mode="before")
    @classmethod
    def _shape(cls, value):
        return _array(value, 2)

    @model_validator(mode="after")
    def _consistent(self):
        d = len(self.center)
        if self.shape.shape != (d, d):
            raise ValueError("shape must be a d x d matrix")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if abs(np.linalg.det(self.shape)) < 1e-14:
            raise ValueError("shape must be invertible")
        return self

    @classmethod
    def ball(cls, radius: float, d: int, center=None) -> "Ellipsoid":
        center = np.zeros(d) if center is None else center
        return cls(center=center, shape=np.eye(d), radius=radius)

    @property
    def d(self) -> int:
        return len(self.center)

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.d) * self.radius ** self.d * abs(float(np.linalg.det(self.shape)))

    def contains(self, points: np.ndarray) -> np.ndarray:
        z = np.linalg.solve(self.shape, (np.asarray(points) - self.center).T).T
        return np.einsum("nd,nd->n", z, z) <= self.radius ** 2 * (1 + 1e-12)

    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        half = self.radius * np.linalg.norm(self.shape, axis=1)
        return self.center - half, self.center + half

    def _line_roots(self, base: np.ndarray, direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Roots in t of |shape^{-1}(base + t*direction - center)| = radius, row-wise"""
        inv = np.linalg.inv(self.shape)
        p = direction @ inv.T
        q = (base - self.center) @ inv.T
        a = np.einsum("nd,nd->n", p, p)
        b = np.einsum("nd,nd->n", p, q)
        c = np.einsum("nd,nd->n", q, q) - self.radius ** 2
        disc = b * b - a * c
        ok = disc >= 0
        root = np.sqrt(np.where(ok, disc, 0.0))
        return (-b - root) / a, (-b + root) / a, ok

    def ray_intervals(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        base = np.zeros_like(directions)
        t1, t2, ok = self._line_roots(base, directions)
        ok &= t2 > 0
        lo = np.where(ok, np.maximum(t1, 0.0), 0.0)
        hi = np.where(ok, t2, 0.0)
        return lo, hi

    def horizontal_fibers(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For d=2: the interval {t : (t, w) in E} for each height w"""
        w = np.asarray(w, dtype=float)
        base = np.column_stack([np.zeros_like(w), w])
        direction = np.tile([1.0, 0.0], (len(w), 1))
        t1, t2, ok = self._line_roots(base, direction)
        return np.where(ok, t1, 0.0), np.where(ok, t2, 0.0), ok


class RadialGraph(BaseModel):
    """Star-shaped set {t*theta : 0 <= t <= rho(theta)} sampled on an angular grid"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["radial"] = "radial"
    d: int
    rho: np.ndarray

    @field_validator("rho", mode="before")
    @classmethod
    def _rho(cls, value):
        return _array(value, 1)

    @model_validator(mode="after")
    def _positive(self):
        if np.any(self.rho <= 0):
            raise ValueError("radial graph boundary must stay positive")
        if self.d == 1 and len(self.rho) != 2:
            raise ValueError("a d=1 radial graph has exactly two boundary values")
        return self

    @property
    def grid(self) -> AngularGrid:
        if self.d == 3:
            n_z = int(round(np.sqrt(len(self.rho) / 2)))
            return AngularGrid.build(3, 2 * n_z * n_z)
        return AngularGrid.build(self.d, len(self.rho))

    @property
    def measure(self) -> float:
        return self.grid.integrate(self.rho ** self.d / self.d)

    def radius_at(self, directions: np.ndarray) -> np.ndarray:
        """Boundary radius in arbitrary unit directions (linear interpolation)"""
        directions = np.asarray(directions, dtype=float)
        if self.d == 1:
            return np.where(directions[:, 0] >= 0, self.rho[0], self.rho[1])
        if self.d == 2:
            n = len(self.rho)
            theta = np.arctan2(directions[:, 1], directions[:, 0]) % (2 * np.pi)
            nodes = 2 * np.pi * np.arange(n + 1) / n
            return np.interp(theta, nodes, np.append(self.rho, self.rho[0]))
        grid = self.grid
        n_z, n_phi = grid.shape
        table = self.rho.reshape(n_z, n_phi)
        z_nodes = grid.directions[::n_phi, 2]
        z = np.clip(directions[:, 2], z_nodes[0], z_nodes[-1])
        phi = np.arctan2(directions[:, 1], directions[:, 0]) % (2 * np.pi)
        col = phi / (2 * np.pi / n_phi)
        c0 = np.floor(col).astype(int) % n_phi
        c1 = (c0 + 1) % n_phi
        fc = col - np.floor(col)
        row = np.clip(np.searchsorted(z_nodes, z) - 1, 0, n_z - 2)
        fr = (z - z_nodes[row]) / (z_nodes[row + 1] - z_nodes[row])
        low = table[row, c0] * (1 - fc) + table[row, c1] * fc
        high = table[row + 1, c0] * (1 - fc) + table[row + 1, c1] * fc
        return low * (1 - fr) + high * fr

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        r = np.linalg.norm(points, axis=1)
        safe = np.where(r > 0, r, 1.0)
        return r <= self.radius_at(points / safe[:, None])

    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        boundary = self.grid.directions * self.rho[:, None]
        margin = 0.0 if self.d == 1 else 0.01 * float(np.max(self.rho))
        lo = np.minimum(boundary.min(axis=0), 0.0) - margin
        hi = np.maximum(boundary.max(axis=0), 0.0) + margin
        return lo, hi

    def ray_intervals(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        hi = self.radius_at(directions)
        return np.zeros_like(hi), hi


class Grid(BaseModel):
    """Boolean raster; cell (i_1..i_d) covers origin + h*[i, i+1)"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["grid"] = "grid"
    mask: np.ndarray
    h: float
    origin: np.ndarray

    @field_validator("mask", mode="before")
    @classmethod
    def _mask(cls, value):
        return np.array(value, dtype=bool)

    @field_validator("origin", mode="before")
    @classmethod
    def _origin(cls, value):
        return _array(value, 1)

    @model_validator(mode="after")
    def _consistent(self):
        if self.mask.ndim != len(self.origin):
            raise ValueError("mask dimension must match origin length")
        if self.h <= 0:
            raise ValueError("cell size must be positive")
        return self

    @property
    def d(self) -> int:
        return self.mask.ndim

    @property
    def measure(self) -> float:
        return float(np.count_nonzero(self.mask)) * self.h ** self.d

    def same_lattice(self, other: "Grid") -> bool:
        return (self.mask.shape == other.mask.shape and self.h == other.h
                and np.array_equal(self.origin, other.origin))

    def with_mask(self, mask: np.ndarray) -> "Grid":
        return Grid(mask=mask, h=self.h, origin=self.origin)

    def cell_centers(self, occupied_only: bool = True) -> np.ndarray:
        if occupied_only:
            idx = np.argwhere(self.mask)
        else:
            idx = np.indices(self.mask.shape).reshape(self.d, -1).T
        return self.origin + (idx + 0.5) * self.h

    def contains(self, points: np.ndarray) -> np.ndarray:
        idx = np.floor((np.asarray(points) - self.origin) / self.h).astype(np.int64)
        inside = np.all((idx >= 0) & (idx < np.array(self.mask.shape)), axis=1)
        result = np.zeros(len(idx), dtype=bool)
        result[inside] = self.mask[tuple(idx[inside].T)]
        return result

    def bbox(self) -> Tuple[np.ndarray, np.ndarray]:
        idx = np.argwhere(self.mask)
        if len(idx) == 0:
            return self.origin.copy(), self.origin.copy()
        return self.origin + idx.min(axis=0) * self.h, self.origin + (idx.max(axis=0) + 1) * self.h


SetRepresentation = Annotated[Union[Ellipsoid, RadialGraph, Grid], Field(discriminator="kind")]


class SetTuple(BaseModel):
    """A J-tuple of sets in a common dimension d"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    sets: List[SetRepresentation]

    @model_validator(mode="after")
    def _common_dimension(self):
        dims = {s.d for s in self.sets}
        if len(dims) > 1:
            raise ValueError(f"sets live in different dimensions: {sorted(dims)}")
        return self

    @property
    def d(self) -> int:
        return self.sets[0].d

    @property
    def size(self) -> int:
        return len(self.sets)

    def measures(self) -> np.ndarray:
        return np.array([s.measure for s in self.sets])

    def __getitem__(self, j: int) -> SetRepresentation:
        return self.sets[j]

    def replace(self, j: int, new_set: SetRepresentation) -> "SetTuple":
        sets = list(self.sets)
        sets[j] = new_set
        return SetTuple(sets=sets)


class BoundaryProfile(BaseModel):
    """Radial deviation profiles F_j^+ and F_j^- of E_j against B_j"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    index: int
    grid: AngularGrid
    f_plus: np.ndarray
    f_minus: np.ndarray

    @property
    def F(self) -> np.ndarray:
        return self.f_plus - self.f_minus

    def l1_norm(self) -> float:
        return self.grid.integrate(self.f_plus + self.f_minus)

    def l2_norm_squared(self) -> float:
        return self.grid.integrate(self.f_plus ** 2 + self.f_minus ** 2)


class Lattice(BaseModel):
    """Raster geometry shared by grid sets"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    origin: np.ndarray
    h: float
    shape: Tuple[int, ...]

    @field_validator("origin", mode="before")
    @classmethod
    def _origin(cls, value):
        return _array(value, 1)

    @property
    def d(self) -> int:
        return len(self.shape)

    def empty(self) -> Grid:
        return Grid(mask=np.zeros(self.shape, dtype=bool), h=self.h, origin=self.origin)

    def centers(self) -> np.ndarray:
        idx = np.indices(self.shape).reshape(self.d, -1).T
        return self.origin + (idx + 0.5) * self.h



class SetMoments(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    measure: float
    centroid: np.ndarray
    covariance: np.ndarray


class TruncationReport(BaseModel):
    """Bookkeeping of one annulus truncation E_j -> E_j^dagger (cell counts)"""
    model_config = ConfigDict(frozen=True)

    index: int
    width: float
    widenings: int
    far_cells: int
    reverted_cells: int
    measure: float


class NormEquivalence(BaseModel):
    """Observed range of (|F^+|^2 + |F^-|^2) / |E Delta B|^2"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lower: float
    upper: float
    ratios: np.ndarray
