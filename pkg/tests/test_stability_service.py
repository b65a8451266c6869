# tests/test_stability_service.py

"""
Deficit curves near the balls.

Balanced nu=3 perturbations of three unit disks lose
s^2 * (1/2) * 3 sqrt(3) of the functional to leading order, so the fitted
exponent is 2; orbit directions lose nothing.
"""

import math

import numpy as np
import pytest

from models.harmonics import HarmonicTuple
from services import settuple_service, spectral_service, stability_service
from services.errors import ArgumentError

NU3_COEFFICIENT = 1.5 * math.sqrt(3)


class TestPowerLawFit:
    def test_recovers_synthetic_square_law(self):
        s = np.linspace(0.02, 0.1, 5)
        D = 3.0 * s ** 2
        fit = stability_service.fit_power_law(s, D, 1e-3 * D)
        assert not fit.indeterminate
        assert fit.exponent == pytest.approx(2.0, abs=1e-6)
        assert fit.constant == pytest.approx(3.0, rel=1e-5)
        assert fit.exponent_ci[0] <= fit.exponent <= fit.exponent_ci[1]
        assert fit.points_used == 5

    def test_noise_floor_makes_fit_indeterminate(self):
        s = [0.02, 0.04, 0.06]
        fit = stability_service.fit_power_law(s, [1e-6, 2e-6, 3e-6], [1e-5, 1e-5, 1e-5])
        assert fit.indeterminate
        assert fit.exponent is None

    def test_window_is_longest_run(self):
        s = np.array([0.01, 0.02, 0.03, 0.04, 0.05, 0.06])
        D = 2.0 * s ** 2
        err = 1e-3 * D
        err[1] = D[1]
        fit = stability_service.fit_power_law(s, D, err)
        assert fit.window == pytest.approx((0.03, 0.06))
        assert fit.points_used == 4


class TestPaths:
    def test_unknown_path(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        with pytest.raises(ArgumentError):
            stability_service.perturbed_tuple(rs_family_2d, spec_2d, G, 0.1, path="spiral")

    def test_orbit_path_only_for_orbit_directions(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        with pytest.raises(ArgumentError):
            stability_service.perturbed_tuple(rs_family_2d, spec_2d, G, 0.1, path="orbit")

    def test_orbit_path_keeps_measures(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("shear", rs_family_2d, spec_2d)
        E = stability_service.perturbed_tuple(rs_family_2d, spec_2d, G, 0.2, path="orbit")
        np.testing.assert_allclose(E.measures(), spec_2d.e)

    def test_empty_s_list(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        with pytest.raises(ArgumentError):
            stability_service.deficit_curve(rs_family_2d, spec_2d, G, [])


class TestOrbitDirections:
    def test_translation_direction(self, rs_family_2d, spec_2d):
        G = stability_service.symmetry_direction_tuple("translation", rs_family_2d, spec_2d)
        expected = spectral_service.named_harmonic("translation", rs_family_2d, spec_2d)
        assert G.nu == 1
        np.testing.assert_allclose(G.coeffs, expected.coeffs, atol=1e-6)

    def test_shear_direction(self, rs_family_2d, spec_2d):
        G = stability_service.symmetry_direction_tuple("shear", rs_family_2d, spec_2d)
        expected = spectral_service.named_harmonic("shear", rs_family_2d, spec_2d)
        assert G.nu == 2
        np.testing.assert_allclose(G.coeffs, expected.coeffs, atol=1e-6)

    def test_zero_translation_gives_zero_tuple(self, rs_family_2d, spec_2d):
        G = stability_service.symmetry_direction_tuple("translation", rs_family_2d, spec_2d, v=np.zeros(4))
        assert G.is_zero()

    def test_shear_must_be_trace_free(self, rs_family_2d, spec_2d):
        with pytest.raises(ArgumentError):
            stability_service.symmetry_direction_tuple("shear", rs_family_2d, spec_2d, A=np.eye(2))


class TestDeficitCurves:
    def test_translation_costs_nothing(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("translation", rs_family_2d, spec_2d)
        curve = stability_service.deficit_curve(rs_family_2d, spec_2d, G, [0.05, 0.1], engine="mc",
                                                path="orbit", n=2 ** 18, seed=11)
        assert curve.all_within_noise
        assert curve.fit.indeterminate

    def test_nu3_is_quadratic(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        curve = stability_service.deficit_curve(rs_family_2d, spec_2d, G, [0.04, 0.06, 0.08], engine="fiber")
        assert curve.engine == "fiber"
        assert all(p.value > 0 for p in curve.points)
        assert curve.fit.exponent == pytest.approx(2.0, abs=0.25)
        assert curve.as_rows()[0]["s"] == 0.04

    @pytest.mark.slow
    def test_nu3_full_sweep_with_cross_check(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        s = np.linspace(0.02, 0.1, 5)
        curve = stability_service.deficit_curve(rs_family_2d, spec_2d, G, s, engine="fiber",
                                                cross_check=True, n=2 ** 20, seed=11)
        assert curve.fit.points_used >= 3
        assert curve.fit.exponent_ci[0] - 0.1 <= 2.0 <= curve.fit.exponent_ci[1] + 0.1
        assert len(curve.cross_checks) == 2


class TestExpansion:
    def test_nu3_matches_second_order_prediction(self, rs_family_2d, spec_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        result = stability_service.expansion_check(rs_family_2d, spec_2d, G, [0.02, 0.04], engine="fiber")
        assert result.q_value == pytest.approx(0.0, abs=1e-9)
        assert result.quadratic_coefficient == pytest.approx(NU3_COEFFICIENT, rel=1e-2)
        for point in result.points:
            assert point.measured == pytest.approx(point.predicted, rel=0.1)

    def test_zero_tuple(self, rs_family_2d, spec_2d):
        G = HarmonicTuple(d=2, nu=3, coeffs=np.zeros((3, 2)))
        result = stability_service.expansion_check(rs_family_2d, spec_2d, G, [0.01, 0.02])
        assert [p.measured for p in result.points] == [0.0, 0.0]
        assert result.remainder_vanishes


class TestTruncationGain:
    def test_perturbation_inside_annulus_is_untouched(self, rs_family_2d, spec_2d, coarse_lattice_2d):
        G = spectral_service.named_harmonic("nu3", rs_family_2d, spec_2d)
        E = settuple_service.rasterize_tuple(
            settuple_service.radial_from_harmonic(G, 0.1, spec_2d), coarse_lattice_2d
        )
        gain = stability_service.truncation_gain(rs_family_2d, E, spec_2d, 0.3, n=2 ** 14, seed=2,
                                                 lattice=coarse_lattice_2d)
        assert gain.value == 0.0
        assert all(report.reverted_cells == 0 for report in gain.reports)

    def test_blobs_report_every_component(self, rs_family_2d, spec_2d, coarse_lattice_2d):
        E = settuple_service.random_set_tuple(spec_2d, seed=5, kinds=("grid",), lattice=coarse_lattice_2d)
        gain = stability_service.truncation_gain(rs_family_2d, E, spec_2d, 0.25, n=2 ** 15, seed=5,
                                                 lattice=coarse_lattice_2d)
        assert len(gain.reports) == 3
        assert np.isfinite(gain.value) and gain.stderr >= 0
