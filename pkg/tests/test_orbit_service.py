# tests/test_orbit_service.py

"""
Orbit distances: planted members are recovered, and the fit never does
worse than the centered balls.
"""

import numpy as np
import pytest
from scipy.linalg import expm

from models.harmonics import HarmonicTuple
from models.measures import MeasureSpec
from services import orbit_service, settuple_service
from services.errors import ArgumentError


class TestParametrization:
    def test_trace_free_matrix(self):
        M = orbit_service.trace_free(np.array([0.3, -0.2, 0.5]), 2)
        assert np.trace(M) == pytest.approx(0.0)
        np.testing.assert_allclose(orbit_service.trace_free_params(M), [0.3, -0.2, 0.5])

    def test_orbit_member_shifts_by_maps(self, rs_family_2d, spec_2d):
        v = np.array([[0.1, 0.0], [0.0, -0.2]])
        member = orbit_service.orbit_member(rs_family_2d, spec_2d, v, np.eye(2))
        np.testing.assert_allclose(member[2].center, [0.1, -0.2])
        np.testing.assert_allclose(member.measures(), spec_2d.e)


class TestRecovery:
    def test_planted_translation_on_the_line(self, rs_family, spec111):
        E = orbit_service.orbit_member(rs_family, spec111, np.array([0.1, -0.05]), np.eye(1))
        fit = orbit_service.dist_to_orbit(rs_family, E, spec111, starts=3, seed=1)
        assert fit.distance < 1e-3
        np.testing.assert_allclose(fit.v.ravel(), [0.1, -0.05], atol=1e-3)

    def test_planted_member_in_the_plane(self, rs_family_2d, spec_2d):
        psi = expm(np.array([[0.1, 0.05], [0.05, -0.1]]))
        v = np.array([[0.1, 0.0], [0.0, -0.1]])
        E = orbit_service.orbit_member(rs_family_2d, spec_2d, v, psi)
        fit = orbit_service.dist_to_orbit(rs_family_2d, E, spec_2d, starts=3, seed=2)
        assert fit.distance < 1e-3
        assert not fit.upper_bound or fit.distance < 1e-6

    def test_moment_start_of_planted_member(self, rs_family_2d, spec_2d):
        M = np.array([[0.1, 0.05], [0.05, -0.1]])
        v = np.array([[0.2, 0.1], [-0.1, 0.0]])
        E = orbit_service.orbit_member(rs_family_2d, spec_2d, v, expm(M))
        v0, M0 = orbit_service.moment_start(rs_family_2d, E, spec_2d)
        np.testing.assert_allclose(v0, v, atol=1e-10)
        np.testing.assert_allclose(M0, M, atol=1e-8)


class TestOffOrbit:
    def test_fit_no_worse_than_balls(self, rs_family_2d, spec_2d):
        coeffs = np.zeros((3, 2))
        coeffs[:, 0] = 1.0
        E = settuple_service.radial_from_harmonic(HarmonicTuple(d=2, nu=3, coeffs=coeffs), 0.05, spec_2d)
        fit = orbit_service.dist_to_orbit(rs_family_2d, E, spec_2d, starts=3, seed=4)
        to_balls = float(np.max(settuple_service.distance_to_balls(E, spec_2d)))
        assert 0 < fit.distance <= to_balls + 1e-9
        assert len(fit.starts) == 3

    def test_rejects_three_dimensions(self, rs_family):
        spec = MeasureSpec.from_radii([1.0, 1.0, 1.0], 3)
        fam = rs_family.with_dimension(3)
        with pytest.raises(ArgumentError):
            orbit_service.dist_to_orbit(fam, settuple_service.make_ball_tuple(spec), spec)


class TestStarts:
    def test_quarter_turn_is_not_minus_identity(self, rs_family_2d, spec_2d):
        balls = settuple_service.make_ball_tuple(spec_2d)
        objective = orbit_service._Objective(rs_family_2d, balls, spec_2d)
        starts = dict(orbit_service._starts(objective, rs_family_2d, balls, spec_2d, 3, seed=0))
        _, psi = objective.split(starts["quarter-turn"])
        np.testing.assert_allclose(psi, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-12)
        assert not np.allclose(psi, -np.eye(2))

    @pytest.mark.parametrize("planar", [False, True])
    def test_starts_are_pairwise_distinct(self, rs_family, spec111, rs_family_2d, spec_2d, planar):
        if planar:
            fam, spec = rs_family_2d, spec_2d
            v, psi = np.array([[0.1, 0.0], [0.0, -0.1]]), expm(np.array([[0.1, 0.05], [0.05, -0.1]]))
        else:
            fam, spec = rs_family, spec111
            v, psi = np.array([0.1, -0.05]), np.eye(1)
        E = orbit_service.orbit_member(fam, spec, v, psi)
        objective = orbit_service._Objective(fam, E, spec)
        starts = orbit_service._starts(objective, fam, E, spec, 5, seed=3)
        assert [kind for kind, _ in starts[:3]] == ["moments", "identity", "quarter-turn" if planar else "reflected"]
        for i in range(len(starts)):
            for j in range(i + 1, len(starts)):
                assert not np.allclose(starts[i][1], starts[j][1])
