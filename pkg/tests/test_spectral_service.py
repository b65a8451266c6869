# tests/test_spectral_service.py

"""
Spectral scalars and the balanced gap for three unit disks.

For this family lambda_{1,2}(nu) = -(2/nu) sin(2 pi nu / 3) and
lambda_{1,3}(nu) = lambda_{2,3}(nu) = (2/nu) sin(pi nu / 3); every
gamma_j = sqrt(3), the balanced ratios start 0, 1/4, 0, 1/8, 1/5 and the
largest one is 1/4 at nu = 2. Translations sit at ratio 1/2.
"""

import math

import numpy as np
import pytest
import sympy

from models.family import LinearFamily
from models.harmonics import HarmonicTuple
from models.measures import MeasureSpec
from models.sets import AngularGrid
from services import kernel_service, spectral_service
from services.errors import ArgumentError, StructuralError

SQRT3 = math.sqrt(3)


def lambda_12(nu):
    return -(2.0 / nu) * math.sin(2 * math.pi * nu / 3)


def lambda_13(nu):
    return (2.0 / nu) * math.sin(math.pi * nu / 3)


@pytest.fixture(scope="module")
def report():
    fam = LinearFamily(coeffs=[[1, 0], [0, 1], [1, 1]], dim_d=2)
    spec = MeasureSpec.from_radii([1.0, 1.0, 1.0], 2)
    return spectral_service.balanced_gap(fam, spec, nu_max=32)


# -- Scalars -----------------------------------------------------------------------

class TestScalars:
    @pytest.mark.parametrize("nu", range(1, 9))
    def test_closed_forms(self, rs_family_2d, spec_2d, nu):
        assert spectral_service.lambda_scalar(rs_family_2d, spec_2d, 0, 1, nu) == pytest.approx(lambda_12(nu), abs=1e-3)
        assert spectral_service.lambda_scalar(rs_family_2d, spec_2d, 0, 2, nu) == pytest.approx(lambda_13(nu), abs=1e-3)
        assert spectral_service.lambda_scalar(rs_family_2d, spec_2d, 1, 2, nu) == pytest.approx(lambda_13(nu), abs=1e-3)

    def test_same_index_rejected(self, rs_family_2d, spec_2d):
        with pytest.raises(ArgumentError):
            spectral_service.lambda_scalar(rs_family_2d, spec_2d, 1, 1, 2)

    def test_line_has_no_harmonics(self, rs_family, spec111):
        with pytest.raises(ArgumentError):
            spectral_service.lambda_scalar(rs_family, spec111, 0, 1, 2)

    def test_band_for_riesz_sobolev(self, rs_family_2d, spec_2d):
        kernel = kernel_service.pair_kernel(rs_family_2d, spec_2d.e, 2, 0, 1)
        c, lo, hi = spectral_service.cos_band(kernel)
        assert c == pytest.approx(1.0)
        assert (lo, hi) == pytest.approx((-1.0, -0.5))

    def test_three_dimensional_scalars_decay(self, rs_family_2d):
        spec = MeasureSpec.from_radii([1.0, 1.0, 1.0], 3)
        fam = rs_family_2d.with_dimension(3)
        values = spectral_service.pair_scalars(fam, spec, 0, 1, [1, 2, 4, 8, 16])
        assert np.all(np.isfinite(values))
        assert abs(values[-1]) < abs(values[0])


# -- Balanced gap --------------------------------------------------------------------

class TestBalancedGap:
    def test_weights(self, report):
        np.testing.assert_allclose(report.gammas, SQRT3, rtol=1e-2)
        np.testing.assert_allclose(report.weights, report.gammas)

    def test_first_ratios(self, report):
        np.testing.assert_allclose(report.ratios[:5], [0.0, 0.25, 0.0, 0.125, 0.2], atol=5e-3)

    def test_gap_is_quarter(self, report):
        assert report.gap == pytest.approx(0.25, abs=5e-3)
        assert report.gap <= 0.49
        assert report.summary()["margin"] == pytest.approx(0.25, abs=5e-3)

    def test_translation_ratio_is_half(self, report):
        assert report.full_ratios[0] == pytest.approx(0.5, abs=1e-2)

    def test_operator_norms_decay(self, report):
        assert report.operator_norms[-1] < report.operator_norms[0] / 10
        assert report.tail_exponent is not None and report.tail_exponent > 0

    def test_weak_pair_has_no_gap(self, rs_family_2d):
        spec = MeasureSpec.from_radii([1.0, 1.0, 2.0], 2)
        with pytest.raises(StructuralError):
            spectral_service.balanced_gap(rs_family_2d, spec, nu_max=4)


# -- Quadratic form --------------------------------------------------------------------

class TestQuadraticForm:
    def test_translation_tuple(self, rs_family_2d, spec_2d, report):
        G = spectral_service.named_harmonic("translation", rs_family_2d, spec_2d)
        np.testing.assert_allclose(G.coeffs, [[math.sqrt(math.pi), 0], [0, 0], [math.sqrt(math.pi), 0]], atol=1e-9)
        assert not G.balanced
        assert spectral_service.eval_Q(G, report) == pytest.approx(SQRT3 * math.pi, rel=1e-2)
        assert spectral_service.weighted_norm(G, report) == pytest.approx(2 * SQRT3 * math.pi, rel=1e-2)

    def test_nu3_has_vanishing_form(self, rs_family_2d, spec_2d, report):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        assert G.balanced
        assert spectral_service.eval_Q(G, report) == pytest.approx(0.0, abs=1e-9)
        assert spectral_service.weighted_norm(G, report) == pytest.approx(3 * SQRT3, rel=1e-2)

    def test_single_component_has_no_pairs(self, report):
        G = HarmonicTuple(d=2, nu=2, coeffs=[[0, 0], [1, 0], [0, 0]])
        assert spectral_service.eval_Q(G, report) == 0.0

    def test_mixed_degrees_rejected(self, rs_family_2d, spec_2d, report):
        parts = [spectral_service.named_harmonic(name, rs_family_2d, spec_2d) for name in ("nu2", "nu3")]
        with pytest.raises(ArgumentError):
            spectral_service.eval_Q(parts, report)

    def test_missing_degree_rejected(self, rs_family_2d, spec_2d):
        short = spectral_service.spectral_report(rs_family_2d, spec_2d, degrees=[1, 2])
        with pytest.raises(ArgumentError):
            spectral_service.eval_Q(spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d), short)

    def test_direct_integral_matches_scalars(self, rs_family_2d, spec_2d, report):
        G = spectral_service.named_harmonic("nu2", rs_family_2d, spec_2d)
        direct = spectral_service.eval_Q_direct(G, rs_family_2d, spec_2d)
        assert direct == pytest.approx(spectral_service.eval_Q(G, report), rel=5e-3)

    def test_unknown_name(self, rs_family_2d, spec_2d):
        with pytest.raises(ArgumentError):
            spectral_service.named_harmonic("nu9", rs_family_2d, spec_2d)


# -- Discretized operators ----------------------------------------------------------------

class TestOperators:
    @pytest.mark.parametrize("nu", [1, 2, 5])
    def test_harmonics_are_eigenvectors(self, rs_family_2d, spec_2d, nu):
        n = 512
        K = spectral_service.operator_matrix(rs_family_2d, spec_2d, 0, 1, n)
        theta = 2 * np.pi * np.arange(n) / n
        g = np.cos(nu * theta)
        np.testing.assert_allclose(K @ g, lambda_12(nu) * g, atol=5e-3)

    def test_degrees_do_not_mix(self, rs_family_2d, spec_2d):
        n = 512
        theta = 2 * np.pi * np.arange(n) / n
        value = spectral_service.eval_Q_pair(rs_family_2d, spec_2d, 0, 1, np.cos(2 * theta), np.cos(3 * theta), n)
        assert abs(value) < 1e-8

    def test_only_in_the_plane(self, rs_family_2d):
        spec = MeasureSpec.from_radii([1.0, 1.0, 1.0], 3)
        with pytest.raises(ArgumentError):
            spectral_service.operator_matrix(rs_family_2d.with_dimension(3), spec, 0, 1)


# -- Projections -----------------------------------------------------------------------

class TestProjections:
    def test_projection_of_cos3(self):
        grid = AngularGrid.build(2, 2048)
        F = np.cos(3 * grid.angles)
        np.testing.assert_allclose(spectral_service.project_pi_nu(F, 3, grid), [math.sqrt(math.pi), 0.0], atol=1e-10)
        np.testing.assert_allclose(spectral_service.project_pi_nu(F, 2, grid), [0.0, 0.0], atol=1e-10)

    def test_projection_beyond_resolution(self):
        grid = AngularGrid.build(2, 16)
        with pytest.raises(ArgumentError):
            spectral_service.project_pi_nu(np.zeros(16), 8, grid)

    def test_balance_rules(self):
        pinned, designated = (0, 1), 0
        nu1 = HarmonicTuple(d=2, nu=1, coeffs=[[0, 0], [0, 0], [1, 0]])
        nu2 = HarmonicTuple(d=2, nu=2, coeffs=[[1, 0], [1, 0], [0, 0]])
        assert spectral_service.is_balanced(nu1, pinned, designated)
        assert not spectral_service.is_balanced(nu2, pinned, designated)
        assert spectral_service.balanced_indices(3, 2, pinned, designated) == [1, 2]


# -- Polynomials and P_sharp --------------------------------------------------------------

class TestPolynomials:
    x1, x2 = sympy.symbols("x1 x2", real=True)

    def test_extract_odd_part(self):
        assert sympy.simplify(spectral_service.extract_P("x1*x2", 1.0, 2) - self.x1) == 0
        assert spectral_service.extract_P("x1**2 - x2**2", 1.0, 2) == 0
        assert spectral_service.extract_P("x2", 1.0, 2, nu=1) == 1

    def test_radius_scaling(self):
        # r^(2 - d - nu) with d = 2, nu = 1
        assert float(spectral_service.extract_P("x2", 2.0, 2, nu=1)) == pytest.approx(0.5)

    def test_harmonic_polynomial_matches_values(self):
        G = HarmonicTuple(d=2, nu=2, coeffs=[[0.3, -0.7]])
        poly = spectral_service.harmonic_polynomial(G, 0)
        angle = 0.4
        point = {self.x1: math.cos(angle), self.x2: math.sin(angle)}
        direction = np.array([[math.cos(angle), math.sin(angle)]])
        assert float(poly.subs(point)) == pytest.approx(float(G.values(direction)[0, 0]))

    def test_translation_has_vanishing_p_sharp(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("translation", rs_family_2d, spec_2d)
        assert spectral_service.p_sharp_l2(G, rs_family_2d, spec_2d) == pytest.approx(0.0, abs=1e-12)

    def test_rotation_unlocks_nu2(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu2", rs_family_2d, spec_2d)
        assert spectral_service.p_sharp_l2(G, rs_family_2d, spec_2d) == pytest.approx(0.0, abs=1e-12)
        certificate = spectral_service.find_rotation_nonvanishing(G, rs_family_2d, spec_2d, trials=8, seed=1)
        assert certificate.found
        assert 1 < certificate.trials <= 8
        assert certificate.p_sharp_l2 > 0

    def test_zero_tuple_rejected(self, rs_family_2d, spec_2d):
        G = HarmonicTuple(d=2, nu=3, coeffs=np.zeros((3, 2)))
        with pytest.raises(ArgumentError):
            spectral_service.find_rotation_nonvanishing(G, rs_family_2d, spec_2d)

    def test_unbalanced_tuple_rejected(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("translation", rs_family_2d, spec_2d)
        with pytest.raises(ArgumentError):
            spectral_service.find_rotation_nonvanishing(G, rs_family_2d, spec_2d)
