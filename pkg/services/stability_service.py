# services/stability_service.py

"""
Deficit experiments around the balls.

E(s) is either the radial family rho_j^d = r_j^d + d s G_j or, for the two
orbit directions, the exact orbit path (translated balls, sheared ellipses).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.optimize import curve_fit
from scipy.stats import t as student_t

from config import settings
from models.family import LinearFamily
from models.harmonics import HarmonicTuple, SpectralReport, basis_dimension
from models.measures import MeasureSpec
from models.sets import Lattice, SetTuple
from models.stability import (
    DeficitCurve,
    DeficitPoint,
    ExpansionPoint,
    ExpansionReport,
    PowerLawFit,
    TruncationGain,
)
from services import functional_service, orbit_service, settuple_service, spectral_service
from services.errors import ArgumentError, PropertyViolation
from services.family_service import select_independent_subset
from services.rng_service import resolve_seed

logger = logging.getLogger("stability_service")

PATHS = ("radial", "orbit")
SHEAR = np.diag([1.0, -1.0])


def default_engine(fam: LinearFamily, spec: MeasureSpec) -> str:
    return "fiber" if spec.d == 2 and fam.m == 2 else "mc"


def _unit_translation(fam: LinearFamily, d: int) -> np.ndarray:
    v = np.zeros((fam.m, d))
    v[0, 0] = 1.0
    return v


def perturbed_tuple(fam: LinearFamily, spec: MeasureSpec, G: HarmonicTuple, s: float,
                    path: str = "radial") -> SetTuple:
    """E(s) along the radial family or along the exact orbit path of a named orbit direction"""
    if path == "radial":
        return settuple_service.radial_from_harmonic(G, s, spec)
    if path != "orbit":
        raise ArgumentError(f"unknown path {path}; choose from {', '.join(PATHS)}")
    if G.name == "translation":
        return orbit_service.orbit_member(fam, spec, s * _unit_translation(fam, spec.d), np.eye(spec.d))
    if G.name == "shear":
        return orbit_service.orbit_member(fam, spec, np.zeros((fam.m, spec.d)), expm(s * SHEAR))
    raise ArgumentError("the orbit path exists for the translation and shear directions only")


# -- Fitting --------------------------------------------------------------------

def _window(s: np.ndarray, usable: np.ndarray) -> Tuple[int, int]:
    """Longest run of consecutive usable points"""
    best, start = (0, 0), None
    for k, ok in enumerate(np.append(usable, False)):
        if ok and start is None:
            start = k
        elif not ok and start is not None:
            if k - start > best[1] - best[0]:
                best = (start, k)
            start = None
    return best


def fit_power_law(s: Sequence[float], deficits: Sequence[float], stderr: Sequence[float],
                  max_relative_error: float = None) -> PowerLawFit:
    """
    Weighted least-squares fit of log deficit = log c + p log s.

    Points enter when the deficit exceeds 5 stderr and stderr / deficit is
    below `max_relative_error`; the longest consecutive run of such points
    in s is the fit window.
    """
    max_relative_error = max_relative_error or settings.FIT_MAX_RELATIVE_ERROR
    s = np.asarray(s, dtype=float)
    D = np.asarray(deficits, dtype=float)
    err = np.asarray(stderr, dtype=float)
    order = np.argsort(s)
    s, D, err = s[order], D[order], err[order]

    usable = (D > 5 * err) & (D > 0)
    usable &= np.where(D > 0, err / np.where(D > 0, D, 1.0), np.inf) < max_relative_error
    lo, hi = _window(s, usable)
    if hi - lo < 3:
        logger.warning(f"Power-law fit indeterminate: {int(np.count_nonzero(usable))} points above the noise floor")
        return PowerLawFit(indeterminate=True, points_used=hi - lo)

    x, y = np.log(s[lo:hi]), np.log(D[lo:hi])
    sigma = np.maximum(err[lo:hi] / D[lo:hi], 1e-9)
    params, covariance = curve_fit(lambda x, a, p: a + p * x, x, y, sigma=sigma, absolute_sigma=False)
    dof = len(x) - 2
    errors = np.sqrt(np.diag(covariance)) if dof > 0 else np.full(2, np.inf)
    q = float(student_t.ppf(0.975, max(dof, 1)))
    log_c, p = (float(v) for v in params)
    fit = PowerLawFit(
        exponent=p,
        constant=float(np.exp(log_c)),
        exponent_ci=(p - q * float(errors[1]), p + q * float(errors[1])),
        constant_ci=(float(np.exp(log_c - q * errors[0])), float(np.exp(log_c + q * errors[0]))),
        window=(float(s[lo]), float(s[hi - 1])),
        points_used=hi - lo,
    )
    logger.info(f"Power-law fit: exponent {p:.4f} [{fit.exponent_ci[0]:.4f}, {fit.exponent_ci[1]:.4f}], "
                f"constant {fit.constant:.6g}, {fit.points_used} points")
    return fit


# -- Curves -------------------------------------------------------------------

def _deficit_point(fam, spec, G, s, path, engine, n, seed) -> DeficitPoint:
    E = perturbed_tuple(fam, spec, G, s, path)
    estimate = functional_service.deficit(fam, E, spec, engine=engine, n=n, seed=seed)
    floor = 3 * estimate.stderr + 1e-9 * max(1.0, abs(estimate.phi_star or 0.0))
    if estimate.value < -floor:
        logger.error(f"Deficit {estimate.value:.6g} at s={s} is negative beyond its error bar")
        raise PropertyViolation(f"Phi(E(s)) exceeds Phi(E*) at s={s}: deficit {estimate.value:.6g}")
    return DeficitPoint(s=float(s), value=estimate.value, stderr=estimate.stderr, engine=engine)


def deficit_curve(fam: LinearFamily, spec: MeasureSpec, G: HarmonicTuple, s_values: Sequence[float],
                  engine: str = None, path: str = "radial", n: int = None, seed: int = None,
                  cross_check: bool = False) -> DeficitCurve:
    """
    Deficits Phi(E*) - Phi(E(s)) with error bars and a log-log fit.

    With `cross_check`, the two ends of the fit window (or of the s list when
    the fit is indeterminate) are recomputed with Monte Carlo.

    Raises:
        ArgumentError: If an s value pushes a boundary through the origin
        PropertyViolation: If a deficit is negative beyond 3 stderr
    """
    if path not in PATHS:
        raise ArgumentError(f"unknown path {path}; choose from {', '.join(PATHS)}")
    if not len(s_values):
        raise ArgumentError("a deficit curve needs at least one s value")
    engine = engine or default_engine(fam, spec)
    seed = resolve_seed(seed)

    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        points = list(pool.map(
            lambda s: _deficit_point(fam, spec, G, s, path, engine, n, seed), [float(s) for s in s_values]
        ))
    fit = fit_power_law([p.s for p in points], [p.value for p in points], [p.stderr for p in points])

    checks = []
    if cross_check and engine != "mc":
        ends = fit.window or (points[0].s, points[-1].s)
        checks = [_deficit_point(fam, spec, G, s, path, "mc", n, seed) for s in sorted(set(ends))]
        for check in checks:
            reference = next(p for p in points if p.s == check.s)
            if abs(check.value - reference.value) > 3 * np.hypot(check.stderr, reference.stderr) + 1e-12:
                logger.warning(f"MC cross-check at s={check.s} differs: {check.value:.6g} vs {reference.value:.6g}")

    curve = DeficitCurve(
        harmonic=G.name or f"nu{G.nu}", nu=G.nu, path=path, engine=engine, seed=seed,
        points=points, fit=fit, cross_checks=checks,
    )
    logger.info(f"Deficit curve {curve.harmonic} ({path}, {engine}): {len(points)} points, "
                f"exponent {fit.exponent}, seed={seed}")
    return curve


# -- Orbit directions ---------------------------------------------------------

def symmetry_direction_tuple(kind: str, fam: LinearFamily, spec: MeasureSpec, v: np.ndarray = None,
                             A: np.ndarray = None, step: float = 1e-4) -> HarmonicTuple:
    """
    First-order boundary perturbation of t -> (psi_t(B_j) + L_j(t v))_j by central
    differences of the exact boundary profiles, projected onto degree 1
    (translation) or degree 2 (shear, A trace-free).
    """
    d = spec.d
    if d != 2:
        raise ArgumentError("orbit directions are computed for d=2")
    if kind == "translation":
        v = _unit_translation(fam, d) if v is None else np.asarray(v, dtype=float).reshape(fam.m, d)
        path = lambda t: orbit_service.orbit_member(fam, spec, t * v, np.eye(d))
        nu, zero = 1, not np.any(v)
    elif kind == "shear":
        A = SHEAR if A is None else np.asarray(A, dtype=float)
        if abs(np.trace(A)) > 1e-12 * max(1.0, float(np.max(np.abs(A)))):
            raise ArgumentError("shear generators must be trace-free")
        path = lambda t: orbit_service.orbit_member(fam, spec, np.zeros((fam.m, d)), expm(t * A))
        nu, zero = 2, not np.any(A)
    else:
        raise ArgumentError(f"unknown orbit direction {kind}; choose from translation, shear")
    if zero:
        return HarmonicTuple(d=d, nu=nu, coeffs=np.zeros((fam.size, basis_dimension(d, nu))), name=kind)

    forward = settuple_service.boundary_profiles(path(step), spec)
    backward = settuple_service.boundary_profiles(path(-step), spec)
    samples = np.array([(f.F - b.F) / (2 * step) for f, b in zip(forward, backward)])
    G = spectral_service.harmonic_from_samples(samples, nu, forward[0].grid, name=kind)
    pinned, designated = select_independent_subset(fam)
    logger.info(f"Orbit direction {kind}: |G|^2 = {G.norm_squared():.8g}")
    return G.with_coeffs(G.coeffs, balanced=spectral_service.is_balanced(G, pinned, designated))


# -- Expansion ------------------------------------------------------------------

def expansion_check(fam: LinearFamily, spec: MeasureSpec, G: HarmonicTuple, s_values: Sequence[float],
                    report: Optional[SpectralReport] = None, engine: str = None, path: str = "radial",
                    n: int = None, seed: int = None) -> ExpansionReport:
    """
    Compare measured deficits with s^2 (1/2 sum_j gamma_j r_j^{1-d} |G_j|^2 - Q(G)).

    The residual slope is fitted on points whose residual clears 3 stderr;
    None means every residual is inside the noise.
    """
    name = G.name or f"nu{G.nu}"
    if G.is_zero():
        points = [ExpansionPoint(s=float(s), measured=0.0, predicted=0.0, stderr=0.0) for s in s_values]
        return ExpansionReport(harmonic=name, nu=G.nu, weighted_norm=0.0, q_value=0.0, points=points)
    if report is None or G.nu not in report.degrees:
        report = spectral_service.spectral_report(fam, spec, [G.nu], seed=seed)
    norm = spectral_service.weighted_norm(G, report)
    q = spectral_service.eval_Q(G, report)

    curve = deficit_curve(fam, spec, G, s_values, engine=engine, path=path, n=n, seed=seed)
    points = [
        ExpansionPoint(s=p.s, measured=p.value, predicted=p.s ** 2 * (0.5 * norm - q), stderr=p.stderr)
        for p in curve.points
    ]
    significant = [p for p in points if abs(p.residual) > 3 * p.stderr + 1e-12]
    slope = None
    if len(significant) >= 2:
        slope = float(np.polyfit(np.log([p.s for p in significant]), np.log([abs(p.residual) for p in significant]), 1)[0])
    result = ExpansionReport(harmonic=name, nu=G.nu, weighted_norm=norm, q_value=q, points=points, residual_slope=slope)
    if not result.remainder_vanishes:
        logger.warning(f"Expansion residual for {name} scales like s^{slope:.3f}")
    logger.info(f"Expansion check {name}: coefficient {result.quadratic_coefficient:.8g}, residual slope {slope}")
    return result


def truncation_gain(fam: LinearFamily, E: SetTuple, spec: MeasureSpec, width: float, n: int = None,
                    seed: int = None, lattice: Lattice = None) -> TruncationGain:
    """Phi(E_dagger) - Phi(E) for the annulus truncation of E"""
    truncated, reports = settuple_service.truncate_to_annulus(E, spec, width, lattice=lattice)
    estimate = functional_service.eval_phi_mc_paired(fam, E, truncated, n=n, seed=seed)
    gain = TruncationGain(value=estimate.value, stderr=estimate.stderr, width=width, reports=reports)
    if not gain.nonnegative():
        logger.warning(f"Truncation lowered Phi by {-gain.value:.6g} (stderr {gain.stderr:.2g})")
    logger.info(f"Truncation gain {gain.value:.8g} +/- {gain.stderr:.2g}, width {width:.4g}")
    return gain
