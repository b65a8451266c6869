# tests/test_settuple_service.py

"""
Set tuples: construction near the balls, transforms, boundary profiles,
symmetric differences and annulus truncation.
"""

import math

import numpy as np
import pytest

from models.harmonics import HarmonicTuple
from models.sets import AngularGrid, Ellipsoid, Grid, RadialGraph
from services import settuple_service
from services.errors import ArgumentError


def nu3_tuple():
    coeffs = np.zeros((3, 2))
    coeffs[:, 0] = 1.0
    return HarmonicTuple(d=2, nu=3, coeffs=coeffs, name="nu3")


# -- Construction -----------------------------------------------------------------

class TestConstruction:
    def test_ball_tuple_carries_measures(self, spec_2d):
        balls = settuple_service.make_ball_tuple(spec_2d)
        np.testing.assert_allclose(balls.measures(), [math.pi] * 3)

    def test_harmonic_perturbation_keeps_measure(self, spec_2d):
        E = settuple_service.radial_from_harmonic(nu3_tuple(), 0.1, spec_2d)
        np.testing.assert_allclose(E.measures(), spec_2d.e, rtol=1e-10)

    def test_harmonic_perturbation_profile_is_sG(self, spec_2d):
        G = nu3_tuple()
        s = 0.05
        E = settuple_service.radial_from_harmonic(G, s, spec_2d)
        profile = settuple_service.boundary_profile(E[0], 1.0, 0)
        expected = s * G.values(profile.grid.directions)[0]
        np.testing.assert_allclose(profile.F, expected, atol=1e-10)

    def test_large_step_rejected(self, spec_2d):
        with pytest.raises(ArgumentError):
            settuple_service.radial_from_harmonic(nu3_tuple(), 5.0, spec_2d)

    def test_random_tuple_is_reproducible(self, spec_2d, coarse_lattice_2d):
        a = settuple_service.random_set_tuple(spec_2d, seed=4, lattice=coarse_lattice_2d)
        b = settuple_service.random_set_tuple(spec_2d, seed=4, lattice=coarse_lattice_2d)
        for x, y in zip(a.sets, b.sets):
            assert type(x) is type(y)
            assert x.measure == y.measure

    def test_random_ellipsoids_keep_measures(self, spec_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=9, kinds=("ellipsoid",))
        np.testing.assert_allclose(E.measures(), spec_2d.e, rtol=1e-9)

    def test_random_sl_matrix_has_unit_determinant(self):
        gen = np.random.default_rng(0)
        A = settuple_service.random_sl_matrix(gen, 3, 0.3)
        assert np.linalg.det(A) == pytest.approx(1.0)


# -- Transforms ---------------------------------------------------------------------

class TestTransforms:
    def test_translation_moves_centroid(self):
        ball = Ellipsoid.ball(1.0, 2)
        moved = settuple_service.translate_set(ball, [0.2, -0.1])
        np.testing.assert_allclose(settuple_service.set_moments(moved).centroid, [0.2, -0.1])

    def test_radial_graphs_do_not_translate(self):
        with pytest.raises(ArgumentError):
            settuple_service.translate_set(RadialGraph(d=2, rho=np.ones(64)), [0.1, 0.0])

    def test_linear_image_scales_measure(self):
        ball = Ellipsoid.ball(1.0, 2)
        image = settuple_service.linear_image(ball, [[2.0, 0.0], [0.0, 1.0]])
        assert image.measure == pytest.approx(2 * math.pi)

    def test_ball_moments(self):
        moments = settuple_service.set_moments(Ellipsoid.ball(1.0, 2))
        np.testing.assert_allclose(moments.covariance, np.eye(2) / 4)

    def test_radial_moments_match_ellipsoid(self):
        grid = AngularGrid.build(2, 1024)
        disk = RadialGraph(d=2, rho=np.ones(grid.size))
        moments = settuple_service.set_moments(disk)
        assert moments.measure == pytest.approx(math.pi)
        np.testing.assert_allclose(moments.covariance, np.eye(2) / 4, atol=1e-10)

    def test_dilation(self):
        assert settuple_service.dilate_set(Ellipsoid.ball(1.0, 2), 2.0).measure == pytest.approx(4 * math.pi)
        with pytest.raises(ArgumentError):
            settuple_service.dilate_set(Ellipsoid.ball(1.0, 2), 0.0)


# -- Serialization --------------------------------------------------------------------

class TestSerialization:
    def test_grid_text_survives_reload(self, coarse_lattice_2d):
        grid = settuple_service.rasterize(Ellipsoid.ball(1.0, 2), coarse_lattice_2d)
        text = settuple_service.encode_grid(grid)
        assert text.startswith("# grid h=0.0625")
        back = settuple_service.decode_grid(text)
        assert np.array_equal(back.mask, grid.mask)

    def test_truncated_runs_rejected(self):
        with pytest.raises(ArgumentError):
            settuple_service.decode_grid("# grid h=0.5 origin=0.0 0.0 shape=2 2\n1 1\n")

    def test_radial_table_rows(self):
        table = settuple_service.radial_table(RadialGraph(d=2, rho=np.ones(8)))
        assert len(table.splitlines()) == 8


# -- Distances ------------------------------------------------------------------------

class TestDistances:
    def test_translated_disk(self):
        v = 0.3
        moved = Ellipsoid.ball(1.0, 2, center=[v, 0.0])
        measure = settuple_service.symmetric_difference_measure(Ellipsoid.ball(1.0, 2), moved)
        lens = 2 * math.acos(v / 2) - (v / 2) * math.sqrt(4 - v * v)
        assert measure == pytest.approx(2 * (math.pi - lens), rel=1e-5)

    def test_balls_are_at_distance_zero(self, spec_2d):
        distances = settuple_service.distance_to_balls(settuple_service.make_ball_tuple(spec_2d), spec_2d)
        np.testing.assert_allclose(distances, 0.0, atol=1e-12)

    def test_raster_against_ellipsoid(self, coarse_lattice_2d):
        ball = Ellipsoid.ball(1.0, 2)
        grid = settuple_service.rasterize(ball, coarse_lattice_2d)
        # only boundary cells disagree
        assert settuple_service.symmetric_difference_measure(grid, ball) < 0.4

    def test_norm_equivalence_is_bounded(self, spec_2d):
        tuples = [settuple_service.radial_from_harmonic(nu3_tuple(), s, spec_2d) for s in (0.02, 0.05)]
        result = settuple_service.profile_norm_equivalence(tuples, spec_2d)
        assert 0 < result.lower <= result.upper < 10


# -- Fibers ---------------------------------------------------------------------------

class TestFibers:
    def test_disk_fibers(self):
        w = np.array([0.0, 0.6, 1.5])
        lo, hi, single = settuple_service.horizontal_fibers(Ellipsoid.ball(1.0, 2), w)
        np.testing.assert_allclose(lo, [-1.0, -0.8, 0.0])
        np.testing.assert_allclose(hi, [1.0, 0.8, 0.0])
        assert single.all()

    def test_radial_disk_fibers(self):
        disk = RadialGraph(d=2, rho=np.ones(512))
        lo, hi, single = settuple_service.horizontal_fibers(disk, np.array([0.0, 0.6]))
        np.testing.assert_allclose(hi, [1.0, 0.8], atol=1e-4)
        np.testing.assert_allclose(lo, [-1.0, -0.8], atol=1e-4)


# -- Truncation -----------------------------------------------------------------------

class TestTruncation:
    def test_truncation_preserves_measures(self, spec_2d, coarse_lattice_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=2, kinds=("grid",), lattice=coarse_lattice_2d)
        T, reports = settuple_service.truncate_to_annulus(E, spec_2d, 0.25, coarse_lattice_2d)
        assert len(reports) == 3
        for j in range(3):
            assert T[j].measure == pytest.approx(E[j].measure)
            assert isinstance(T[j], Grid)

    def test_truncated_set_agrees_with_ball_far_away(self, spec_2d, coarse_lattice_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=2, kinds=("grid",), lattice=coarse_lattice_2d)
        T, reports = settuple_service.truncate_to_annulus(E, spec_2d, 0.25, coarse_lattice_2d)
        centers = T[0].cell_centers(occupied_only=False)
        norms = np.linalg.norm(centers, axis=1).reshape(T[0].mask.shape)
        far = np.abs(norms - 1.0) > reports[0].width
        assert np.array_equal(T[0].mask[far], (norms <= 1.0)[far])

    def test_width_must_be_positive(self, spec_2d):
        E = settuple_service.make_ball_tuple(spec_2d)
        with pytest.raises(ArgumentError):
            settuple_service.truncate_to_annulus(E, spec_2d, 0.0)
