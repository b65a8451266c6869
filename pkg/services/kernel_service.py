# services/kernel_service.py

"""
Slice-volume kernels.

K_j(t) is the density at (t, 0, ..., 0) of the push-forward under L_j of the
product of ball indicators over the other indices. In the fiber chart of j
(L_j = u_1) it is

    K_j(t) = |det H|^d * integral of prod_{i != j} 1_{B_i}(rows_i . (t e_1, u_2, ..., u_m)) du_2..du_m

Exact rules cover m=2 (intersections of balls) and d=1, m=3 (polygon
areas); everything else is Monte Carlo over an LP-derived box with common
random numbers per (seed, j).
"""

import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from config import settings
from models.family import LinearFamily
from models.kernels import (
    DegeneracyProfile,
    DerivativeEstimate,
    GammaEstimate,
    KernelProfile,
    PairKernel,
)
from models.measures import unit_ball_volume
from services import geometry_service
from services.errors import ArgumentError, StructuralError
from services.family_service import fiber_chart, pair_chart, require_nondegenerate
from services.geometry_service import lp_maximize
from services.rng_service import Purpose, stream

logger = logging.getLogger("kernel_service")


def radii_of(e: Sequence[float], d: int) -> np.ndarray:
    """r_j with omega_d r_j^d = e_j"""
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        raise ArgumentError("measures must be positive")
    return (e / unit_ball_volume(d)) ** (1.0 / d)


def _others(fam: LinearFamily, j: int) -> list:
    if not 0 <= j < fam.size:
        raise ArgumentError(f"index {j} outside 0..{fam.size - 1}")
    return [i for i in range(fam.size) if i != j]


def kernel_support(fam: LinearFamily, e, d: int, j: int) -> float:
    """Largest t with K_j(t) > 0: the LP maximum of L_j over |L_i| <= r_i, i != j"""
    radii = radii_of(e, d)
    others = _others(fam, j)
    A = fam.matrix
    return geometry_service.slab_extent(A[j], A[others], radii[others])


def kernel_engine(fam: LinearFamily, d: int) -> str:
    if fam.m == 2 and (d <= 2 or fam.size <= 3):
        return "exact"
    if fam.m == 3 and d == 1:
        return "exact"
    return "mc"


def _exact_pair_values(rows: np.ndarray, radii: np.ndarray, others: list, d: int, t: np.ndarray) -> np.ndarray:
    # m=2: the free block u_2 must lie in one ball per other index
    slope = rows[others, 0] / rows[others, 1]
    scaled = radii[others] / np.abs(rows[others, 1])
    values = np.empty(len(t))
    for n, tn in enumerate(t):
        centers = np.zeros((len(others), d))
        centers[:, 0] = -slope * tn
        values[n] = geometry_service.ball_intersection_measure(d, centers, scaled)
    return values


def _exact_polygon_values(rows: np.ndarray, radii: np.ndarray, others: list, t: np.ndarray) -> np.ndarray:
    offset = np.outer(t, rows[others, 0])
    lo = -radii[others][None, :] - offset
    hi = radii[others][None, :] - offset
    return geometry_service.slab_polygon_areas(rows[others, 1:], lo, hi)


def _mc_values(rows, radii, others, d, t, samples, seed, j) -> Tuple[np.ndarray, np.ndarray]:
    m = rows.shape[1]
    half = geometry_service.slab_box(rows[others], radii[others])[1:]
    volume = float(np.prod(2 * half) ** d)
    gen = stream(seed, Purpose.KERNEL_FIBER, j)
    n = samples
    U = gen.uniform(-1.0, 1.0, size=(n, m - 1, d)) * half[None, :, None]
    base = np.einsum("ik,nkd->nid", rows[others, 1:], U)
    lead = rows[others, 0]
    values = np.empty(len(t))
    errors = np.empty(len(t))
    for k, tk in enumerate(t):
        shifted = base.copy()
        shifted[:, :, 0] += lead[None, :] * tk
        hit = np.all(np.einsum("nid,nid->ni", shifted, shifted) <= radii[others][None, :] ** 2, axis=1)
        mean = hit.mean()
        values[k] = volume * mean
        errors[k] = volume * np.sqrt(mean * (1 - mean) / n)
    return values, errors


def kernel_values(fam: LinearFamily, e, d: int, j: int, t, samples: int = None, seed: int = None):
    """
    Evaluate K_j at several radii.

    Returns:
        (values, standard errors, engine); exact engines report zero error

    Raises:
        StructuralError: If the family is degenerate
    """
    require_nondegenerate(fam)
    radii = radii_of(e, d)
    others = _others(fam, j)
    t = np.abs(np.atleast_1d(np.asarray(t, dtype=float)))
    chart = fiber_chart(fam, j)
    scale = chart.jacobian ** d
    engine = kernel_engine(fam, d)

    if engine == "exact" and fam.m == 2:
        values = _exact_pair_values(chart.rows, radii, others, d, t)
        errors = np.zeros_like(values)
    elif engine == "exact":
        values = _exact_polygon_values(chart.rows, radii, others, t)
        errors = np.zeros_like(values)
    else:
        samples = samples or settings.MC_SAMPLES
        values, errors = _mc_values(chart.rows, radii, others, d, t, samples, seed, j)
    return scale * values, scale * errors, engine


def eval_K(fam: LinearFamily, e, d: int, j: int, t: float, samples: int = None, seed: int = None) -> float:
    """K_j at (t, 0, ..., 0)"""
    values, _, _ = kernel_values(fam, e, d, j, [t], samples=samples, seed=seed)
    return float(values[0])


def _richardson(diffs: Sequence[float], ratio: float) -> Tuple[float, float]:
    """Extrapolate first-order differences taken at steps h, h/ratio, h/ratio^2, ..."""
    table = [list(diffs)]
    for level in range(1, len(diffs)):
        factor = ratio ** level
        prev = table[-1]
        table.append([(factor * prev[k + 1] - prev[k]) / (factor - 1) for k in range(len(prev) - 1)])
    best = table[-1][0]
    previous = table[-2][-1] if len(table) > 1 else best
    return best, abs(best - previous)


def one_sided_derivative(fam: LinearFamily, e, d: int, j: int, t0: float, side: str = "left",
                         samples: int = None, seed: int = None) -> DerivativeEstimate:
    """One-sided difference quotient of K_j at t0 with Richardson refinement"""
    if side not in ("left", "right"):
        raise ArgumentError(f"side must be left or right, got {side}")
    steps = tuple(settings.DERIVATIVE_STEPS)
    sign = -1.0 if side == "left" else 1.0
    points = [t0] + [t0 + sign * h for h in steps]
    values, _, _ = kernel_values(fam, e, d, j, points, samples=samples, seed=seed)
    scale = max(float(np.max(values)), 1e-300)
    if values[0] <= 1e-14 * scale or values[0] <= 0:
        logger.debug(f"Kernel {fam.label(j)} vanishes at t0={t0}; {side} derivative not applicable")
        return DerivativeEstimate(index=j, t0=t0, side=side, applicable=False, steps=steps)

    diffs = [sign * (values[k + 1] - values[0]) / h for k, h in enumerate(steps)]
    ratio = steps[0] / steps[1] if len(steps) > 1 else 2.0
    value, error = _richardson(diffs, ratio)
    return DerivativeEstimate(
        index=j,
        t0=t0,
        side=side,
        applicable=True,
        value=float(value),
        error=float(error),
        steps=steps,
        strictly_negative=bool(value + error < -settings.DERIVATIVE_THRESHOLD),
    )


def left_derivative(fam: LinearFamily, e, d: int, j: int, samples: int = None, seed: int = None) -> DerivativeEstimate:
    """
    D^-K_j at t = r_j (which is e_j/2 when d=1).

    Backward differences at the configured steps, refined by Richardson
    extrapolation; the error bar is the change made by the last refinement.
    """
    t0 = float(radii_of(e, d)[j])
    estimate = one_sided_derivative(fam, e, d, j, t0, "left", samples, seed)
    if estimate.applicable:
        logger.info(f"D-K_{fam.label(j)}({t0:.6g}) = {estimate.value:.8g} +/- {estimate.error:.2g}")
    return estimate


def right_derivative(fam: LinearFamily, e, d: int, j: int, samples: int = None, seed: int = None) -> DerivativeEstimate:
    t0 = float(radii_of(e, d)[j])
    return one_sided_derivative(fam, e, d, j, t0, "right", samples, seed)


def gamma(fam: LinearFamily, e, d: int, j: int, samples: int = None, seed: int = None) -> GammaEstimate:
    """
    gamma_j = -dK_j/dt at |y| = r_j, certified by agreement of the one-sided derivatives.

    Raises:
        ArgumentError: If d < 2
    """
    if d < 2:
        raise ArgumentError("gamma is defined for d >= 2")
    r = float(radii_of(e, d)[j])
    left = left_derivative(fam, e, d, j, samples=samples, seed=seed)
    right = right_derivative(fam, e, d, j, samples=samples, seed=seed)
    if not (left.applicable and right.applicable):
        logger.warning(f"gamma_{fam.label(j)}: kernel vanishes at r={r}")
        return GammaEstimate(index=j, radius=r, left=left, right=right)

    mismatch = abs(left.value - right.value)
    differentiable = mismatch <= settings.GAMMA_AGREEMENT * max(1.0, abs(left.value))
    if not differentiable:
        logger.warning(f"gamma_{fam.label(j)}: one-sided derivatives differ by {mismatch:.3g}; "
                       "the pair may not be strictly admissible")
    value = -0.5 * (left.value + right.value)
    logger.info(f"gamma_{fam.label(j)} = {value:.8g} (mismatch {mismatch:.2g})")
    return GammaEstimate(
        index=j, radius=r, left=left, right=right,
        gamma=float(value), mismatch=float(mismatch), differentiable=bool(differentiable),
    )


def kernel_profile(fam: LinearFamily, e, d: int, j: int, n_points: int = 65,
                   samples: int = None, seed: int = None) -> KernelProfile:
    """K_j sampled on [0, support] with the boundary derivative attached"""
    support = kernel_support(fam, e, d, j)
    t = np.linspace(0.0, support, n_points)
    values, _, engine = kernel_values(fam, e, d, j, t, samples=samples, seed=seed)
    derivative = left_derivative(fam, e, d, j, samples=samples, seed=seed)
    logger.info(f"Kernel profile K_{fam.label(j)}: support {support:.6g}, K(0) = {values[0]:.8g}, engine {engine}")
    return KernelProfile(
        index=j, d=d, t=t, values=np.maximum(values, 0.0),
        support=support, engine=engine, derivative=derivative,
    )


def log_concavity_defect(profile: KernelProfile) -> float:
    """Largest discrete second difference of log K over the positive part of the profile"""
    positive = profile.values > 0
    logs = np.log(profile.values[positive])
    if len(logs) < 3:
        return float("-inf")
    return float(np.max(logs[2:] - 2 * logs[1:-1] + logs[:-2]))


def integrate_kernel(fam: LinearFamily, e, j: int, interval: Tuple[float, float]) -> float:
    """integral of K_j over an interval A (d=1): the functional with E_j = A and balls elsewhere"""
    a, b = float(interval[0]), float(interval[1])
    if b <= a:
        return 0.0
    support = kernel_support(fam, e, 1, j)
    lo, hi = max(a, -support), min(b, support)
    if hi <= lo:
        return 0.0
    breaks = [x for x in (0.0,) if lo < x < hi]
    value, _ = quad(lambda t: eval_K(fam, e, 1, j, t), lo, hi, points=breaks or None, limit=200)
    return float(value)


# -- Two-point kernels ------------------------------------------------------------

def pair_kernel(fam: LinearFamily, e, d: int, i: int, j: int) -> PairKernel:
    require_nondegenerate(fam)
    chart = pair_chart(fam, i, j)
    return PairKernel(
        i=i, j=j, d=d,
        rows=chart.rows,
        radii=radii_of(e, d),
        in_span=chart.in_span,
        outside_span=chart.outside_span,
        c=chart.jacobian ** d,
    )


def _fiber_box_mc(kernel: PairKernel, offsets: np.ndarray, samples: int, seed: int) -> float:
    # m >= 4: sample the remaining blocks in a per-component LP box
    outside = list(kernel.outside_span)
    R = kernel.rows[outside, 2:]
    r = kernel.radii[outside]
    free = R.shape[1]
    half_lo = np.empty((free, kernel.d))
    half_hi = np.empty((free, kernel.d))
    for comp in range(kernel.d):
        A_ub = np.vstack([R, -R])
        b_ub = np.concatenate([r - offsets[:, comp], r + offsets[:, comp]])
        for k in range(free):
            top, _ = lp_maximize(np.eye(free)[k], A_ub, b_ub)
            if top is None:
                return 0.0
            bottom, _ = lp_maximize(-np.eye(free)[k], A_ub, b_ub)
            half_lo[k, comp], half_hi[k, comp] = -bottom, top
    gen = stream(seed, Purpose.KERNEL_FIBER, (kernel.i << 8) | kernel.j)
    U = half_lo + (half_hi - half_lo) * gen.uniform(size=(samples, free, kernel.d))
    values = np.einsum("kf,nfd->nkd", R, U) + offsets[None, :, :]
    hit = np.all(np.einsum("nkd,nkd->nk", values, values) <= r[None, :] ** 2, axis=1)
    return float(np.prod(half_hi - half_lo) * hit.mean())


def eval_M(fam: LinearFamily, e, d: int, i: int, j: int, x, y,
           kernel: PairKernel = None, samples: int = None, seed: int = None) -> float:
    """
    M_{i,j}(x, y): the density of the functional as a bilinear form in (f_i, f_j)
    with balls in the other slots.
    """
    kernel = kernel or pair_kernel(fam, e, d, i, j)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (d,) or y.shape != (d,):
        raise ArgumentError(f"M_{{i,j}} takes two points of R^{d}")

    rows, radii = kernel.rows, kernel.radii
    for k in kernel.in_span:
        point = rows[k, 0] * x + rows[k, 1] * y
        if float(point @ point) > radii[k] ** 2 * (1 + 1e-12):
            return 0.0
    if not kernel.outside_span:
        return kernel.c

    outside = list(kernel.outside_span)
    offsets = np.outer(rows[outside, 0], x) + np.outer(rows[outside, 1], y)
    if fam.m == 3:
        coeff = rows[outside, 2]
        centers = -offsets / coeff[:, None]
        measure = geometry_service.ball_intersection_measure(d, centers, radii[outside] / np.abs(coeff))
        if measure is not None:
            return kernel.c * measure
    samples = samples or settings.MC_SAMPLES // 16
    return kernel.c * _fiber_box_mc(kernel, offsets, samples, seed)


def angular_degeneracy(fam: LinearFamily, e, i: int, j: int, k: int, deltas: Sequence[float]) -> DegeneracyProfile:
    """
    Exact (sigma x sigma)-measure of the boundary layer of a dependent triple, d=2.

    With L_k = a L_i + b L_j the condition only involves the angle difference
    phi, through |a r_i theta + b r_j theta'|^2 = alpha^2 + beta^2 + 2 alpha beta cos(phi).
    """
    chart = pair_chart(fam, i, j)
    if k not in chart.in_span:
        raise StructuralError(f"map {fam.label(k)} is not in the span of {fam.label(i)}, {fam.label(j)}")
    radii = radii_of(e, 2)
    alpha = chart.rows[k, 0] * radii[i]
    beta = chart.rows[k, 1] * radii[j]
    deltas = np.asarray(deltas, dtype=float)

    def cos_of(level):
        return np.clip((level - alpha ** 2 - beta ** 2) / (2 * alpha * beta), -1.0, 1.0)

    inner = np.maximum(radii[k] - deltas, 0.0) ** 2
    outer = (radii[k] + deltas) ** 2
    c1, c2 = cos_of(inner), cos_of(outer)
    lo, hi = np.minimum(c1, c2), np.maximum(c1, c2)
    # phi ranges over a full circle; each cosine band is hit on two arcs
    measures = 2 * np.pi * 2 * (np.arccos(lo) - np.arccos(hi))

    positive = measures > 0
    slope = float("nan")
    if np.count_nonzero(positive) >= 2:
        slope = float(np.polyfit(np.log(deltas[positive]), np.log(measures[positive]), 1)[0])
    logger.info(f"Boundary layer ({fam.label(i)},{fam.label(j)};{fam.label(k)}): log-log slope {slope:.4f}")
    return DegeneracyProfile(i=i, j=j, k=k, deltas=deltas, measures=measures, slope=slope)
