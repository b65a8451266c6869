# tests/test_kernel_service.py

"""
Slice-volume kernels against closed forms.

On the line with unit intervals K_3(t) = 1 - |t|; in the plane with unit
disks K_3 is the lens area 2 acos(t/2) - (t/2) sqrt(4 - t^2), whose slope
at t = 1 is -sqrt(3).
"""

import math

import numpy as np
import pytest

from models.family import LinearFamily
from services import kernel_service
from services.errors import ArgumentError, StructuralError

UNIT_DISKS = [math.pi, math.pi, math.pi]


def lens(t):
    return 2 * math.acos(t / 2) - (t / 2) * math.sqrt(4 - t * t)


class TestKernelValues:
    def test_triangle_kernel_on_the_line(self, rs_family):
        assert kernel_service.eval_K(rs_family, [1, 1, 1], 1, 2, 0.25) == pytest.approx(0.75)
        assert kernel_service.eval_K(rs_family, [1, 1, 1], 1, 2, -0.25) == pytest.approx(0.75)
        assert kernel_service.eval_K(rs_family, [1, 1, 1], 1, 2, 1.2) == pytest.approx(0.0)

    def test_lens_kernel_in_the_plane(self, rs_family_2d):
        for t in (0.0, 0.5, 1.0, 1.5):
            assert kernel_service.eval_K(rs_family_2d, UNIT_DISKS, 2, 2, t) == pytest.approx(lens(t), rel=1e-9)

    def test_support_is_sum_of_radii(self, rs_family, rs_family_2d):
        assert kernel_service.kernel_support(rs_family, [1, 1, 1], 1, 2) == pytest.approx(1.0)
        assert kernel_service.kernel_support(rs_family_2d, UNIT_DISKS, 2, 2) == pytest.approx(2.0)

    def test_mc_engine_agrees_with_exact(self):
        # three variables in the plane force Monte Carlo
        fam = LinearFamily(coeffs=[[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dim_d=2)
        e = [math.pi] * 4
        values, errors, engine = kernel_service.kernel_values(fam, e, 2, 0, [0.0], samples=2 ** 18, seed=3)
        assert engine == "mc"
        assert errors[0] > 0
        assert values[0] > 0

    def test_bad_index(self, rs_family):
        with pytest.raises(ArgumentError):
            kernel_service.eval_K(rs_family, [1, 1, 1], 1, 5, 0.0)

    def test_polygon_engine_on_three_variables(self):
        fam = LinearFamily(coeffs=[[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dim_d=1)
        assert kernel_service.kernel_engine(fam, 1) == "exact"
        # slice of the cube through the origin
        value = kernel_service.eval_K(fam, [1, 1, 1, 1], 1, 3, 0.0)
        assert value > 0


class TestDerivatives:
    def test_left_derivative_of_triangle(self, rs_family):
        estimate = kernel_service.left_derivative(rs_family, [1, 1, 1], 1, 2)
        assert estimate.applicable
        assert estimate.value == pytest.approx(-1.0, abs=0.05)
        assert estimate.strictly_negative

    def test_gamma_of_unit_disks(self, rs_family_2d):
        estimate = kernel_service.gamma(rs_family_2d, UNIT_DISKS, 2, 2)
        assert estimate.differentiable
        assert estimate.gamma == pytest.approx(math.sqrt(3), rel=1e-2)

    def test_gamma_needs_two_dimensions(self, rs_family):
        with pytest.raises(ArgumentError):
            kernel_service.gamma(rs_family, [1, 1, 1], 1, 2)

    def test_derivative_not_applicable_outside_support(self, rs_family):
        estimate = kernel_service.one_sided_derivative(rs_family, [1, 1, 1], 1, 2, 1.5, "left")
        assert not estimate.applicable
        assert estimate.value is None


class TestProfiles:
    def test_profile_is_log_concave(self, rs_family):
        profile = kernel_service.kernel_profile(rs_family, [1, 1, 1], 1, 2, n_points=41)
        assert profile.support == pytest.approx(1.0)
        assert profile.values[0] == pytest.approx(1.0)
        assert kernel_service.log_concavity_defect(profile) <= 1e-9

    def test_lens_profile_is_log_concave(self, rs_family_2d):
        profile = kernel_service.kernel_profile(rs_family_2d, UNIT_DISKS, 2, 2, n_points=33)
        assert kernel_service.log_concavity_defect(profile) <= 1e-9

    def test_integral_over_ball_is_the_functional(self, rs_family):
        assert kernel_service.integrate_kernel(rs_family, [1, 1, 1], 2, (-0.5, 0.5)) == pytest.approx(0.75, abs=1e-8)

    def test_empty_interval_integrates_to_zero(self, rs_family):
        assert kernel_service.integrate_kernel(rs_family, [1, 1, 1], 2, (0.3, 0.3)) == 0.0


class TestPairKernels:
    def test_in_span_indicator(self, rs_family_2d):
        kernel = kernel_service.pair_kernel(rs_family_2d, UNIT_DISKS, 2, 0, 1)
        assert kernel.in_span == (2,)
        assert kernel.outside_span == ()
        assert kernel_service.eval_M(rs_family_2d, UNIT_DISKS, 2, 0, 1, [0.3, 0.0], [0.3, 0.0],
                                     kernel=kernel) == pytest.approx(kernel.c)
        assert kernel_service.eval_M(rs_family_2d, UNIT_DISKS, 2, 0, 1, [0.6, 0.0], [0.6, 0.0],
                                     kernel=kernel) == 0.0

    def test_points_must_match_dimension(self, rs_family_2d):
        with pytest.raises(ArgumentError):
            kernel_service.eval_M(rs_family_2d, UNIT_DISKS, 2, 0, 1, [0.3], [0.3])

    def test_boundary_layer_is_linear(self, rs_family_2d):
        profile = kernel_service.angular_degeneracy(rs_family_2d, UNIT_DISKS, 0, 1, 2, np.geomspace(1e-5, 1e-3, 5))
        assert profile.slope == pytest.approx(1.0, abs=0.05)

    def test_boundary_layer_needs_dependent_triple(self):
        fam = LinearFamily(coeffs=[[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], dim_d=2)
        with pytest.raises(StructuralError):
            kernel_service.angular_degeneracy(fam, [math.pi] * 4, 0, 1, 2, [1e-3])
