# tests/test_geometry_service.py

import math

import numpy as np
import pytest

from services import geometry_service
from services.errors import StructuralError


class TestLinearProgramming:
    def test_slab_extent_of_hexagon(self):
        rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        bounds = np.array([0.5, 0.5, 0.5])
        assert geometry_service.slab_extent(np.array([1.0, -1.0]), rows, bounds) == pytest.approx(1.0)
        np.testing.assert_allclose(geometry_service.slab_box(rows, bounds), [0.5, 0.5])

    def test_infeasible_returns_none(self):
        value, point = geometry_service.lp_maximize([1.0], [[1.0], [-1.0]], [-1.0, -1.0])
        assert value is None and point is None

    def test_unbounded_is_structural(self):
        with pytest.raises(StructuralError):
            geometry_service.slab_extent(np.array([0.0, 1.0]), np.array([[1.0, 0.0]]), np.array([1.0]))


class TestPolygons:
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])

    def test_hexagon_area(self):
        hexagon = geometry_service.slab_polygon(self.rows, -0.5 * np.ones(3), 0.5 * np.ones(3))
        assert hexagon.area == pytest.approx(0.75)
        vertices = geometry_service.polygon_vertices(hexagon)
        assert len(vertices) == 6
        assert np.all(np.abs(vertices @ self.rows.T) <= 0.5 + 1e-12)

    def test_redundant_constraint_leaves_square(self):
        region = geometry_service.slab_polygon(self.rows, np.array([-0.5, -0.5, -1.5]), np.array([0.5, 0.5, 1.5]))
        assert region.area == pytest.approx(1.0)

    def test_batched_areas_of_shifted_strip(self):
        shifts = np.array([0.0, 0.3, 0.9, 2.0])
        lo = -0.5 * np.ones((4, 3))
        hi = 0.5 * np.ones((4, 3))
        lo[:, 2] -= shifts
        hi[:, 2] -= shifts
        areas = geometry_service.slab_polygon_areas(self.rows, lo, hi)
        # unit square minus the corner triangles cut by x + y = -0.5 - s and x + y = 0.5 - s
        np.testing.assert_allclose(areas, [0.75, 0.66, 0.18, 0.0], atol=1e-12)
        for k in range(4):
            assert areas[k] == pytest.approx(geometry_service.slab_polygon(self.rows, lo[k], hi[k]).area, abs=1e-12)

    def test_empty_and_flat_slabs(self):
        lo = np.array([[-0.5, -0.5, 0.2], [-0.5, -0.5, 0.1]])
        hi = np.array([[0.5, 0.5, 0.1], [0.5, 0.5, 0.1]])
        areas = geometry_service.slab_polygon_areas(self.rows, lo, hi)
        np.testing.assert_array_equal(areas, [0.0, 0.0])
        assert len(geometry_service.polygon_vertices(geometry_service.slab_polygon(self.rows, lo[0], hi[0]))) == 0

    def test_parallel_rows_are_structural(self):
        rows = np.array([[1.0, 1.0], [2.0, 2.0]])
        with pytest.raises(StructuralError):
            geometry_service.slab_polygon(rows, -np.ones(2), np.ones(2))


class TestBalls:
    def test_lens_limits(self):
        assert geometry_service.lens_area(1.0, 1.0, 0.0) == pytest.approx(math.pi)
        assert geometry_service.lens_area(1.0, 1.0, 2.5) == 0.0
        assert geometry_service.lens_area(1.0, 0.5, 0.2) == pytest.approx(math.pi * 0.25)

    def test_lens_at_unit_distance(self):
        expected = 2 * math.pi / 3 - math.sqrt(3) / 2
        assert geometry_service.lens_area(1.0, 1.0, 1.0) == pytest.approx(expected)

    def test_ball_pair_volume_three_dimensions(self):
        # two unit balls one radius apart share two caps of height 1/2
        expected = 2 * math.pi * 0.25 * (3 - 0.5) / 3
        assert geometry_service.ball_pair_volume(3, 1.0, 1.0, 1.0) == pytest.approx(expected)

    def test_ball_pair_volume_line(self):
        assert geometry_service.ball_pair_volume(1, 0.5, 0.5, 0.25) == pytest.approx(0.75)

    def test_reuleaux_triangle(self):
        centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        area = geometry_service.disk_intersection_area(centers, np.ones(3))
        assert area == pytest.approx((math.pi - math.sqrt(3)) / 2, rel=1e-9)

    def test_disjoint_disks(self):
        centers = np.array([[0.0, 0.0], [3.0, 0.0], [1.5, 0.0]])
        assert geometry_service.disk_intersection_area(centers, np.ones(3)) == 0.0

    def test_no_exact_rule_for_three_balls_in_space(self):
        assert geometry_service.ball_intersection_measure(3, np.zeros((3, 3)), np.ones(3)) is None


class TestQuadrature:
    def test_composite_rule_integrates_polynomials(self):
        x, w = geometry_service.composite_gauss_legendre(0.0, 2.0, 4, 5)
        assert w.sum() == pytest.approx(2.0)
        assert np.sum(w * x ** 7) == pytest.approx(2.0 ** 8 / 8)
