# services/spectral_service.py

"""
Spherical harmonic machinery for the second-order analysis around the balls.

The operators T_{i,j} have kernels M_{i,j}(r_i theta, r_j theta') that only
depend on theta . theta', so each acts on H_nu as a scalar lambda_{i,j}(nu).
For m=2 the kernel is a constant times the indicator of a band
lo <= theta . theta' <= hi and the scalars have closed forms; otherwise the
zonal profile is integrated by Gauss-Legendre rules (Funk-Hecke in d=3).

Q counts each unordered pair once: Q(G) = sum_{i<j} lambda_{i,j}(nu) <G_i, G_j>.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from scipy.special import eval_legendre
from scipy.spatial.transform import Rotation

from config import settings
from models.family import LinearFamily
from models.harmonics import (
    HarmonicTuple,
    RotationCertificate,
    SpectralReport,
    basis_dimension,
    basis_values,
)
from models.measures import MeasureSpec
from models.sets import AngularGrid
from services import admissibility_service, geometry_service, kernel_service
from services.errors import ArgumentError, ComputationError, StructuralError
from services.family_service import require_nondegenerate, select_independent_subset
from services.rng_service import Purpose, resolve_seed, stream

logger = logging.getLogger("spectral_service")

SYMBOLS = sympy.symbols("x1:4", real=True)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _check_dimension(d: int) -> None:
    if d not in (2, 3):
        raise ArgumentError(f"harmonic analysis is provided for d=2 and d=3, got {d}")


@lru_cache(maxsize=4)
def _grid(d: int, n: int) -> AngularGrid:
    return AngularGrid.build(d, n)


# -- Projections ------------------------------------------------------------------

def max_degree(grid: AngularGrid) -> int:
    """Largest degree the grid resolves exactly"""
    if grid.d == 2:
        return grid.size // 2 - 1
    return grid.shape[0] - 1


def project_pi_nu(F: np.ndarray, nu: int, grid: AngularGrid) -> np.ndarray:
    """
    Coefficients of the orthogonal projection of F (sampled on `grid`) onto H_nu.

    Raises:
        ArgumentError: If nu exceeds what the grid resolves
    """
    _check_dimension(grid.d)
    if nu < 0 or nu > max_degree(grid):
        raise ArgumentError(f"degree {nu} is beyond the grid resolution ({max_degree(grid)})")
    F = np.asarray(F, dtype=float)
    return basis_values(grid.d, nu, grid.directions) @ (grid.weights * F)


def harmonic_from_samples(F: np.ndarray, nu: int, grid: AngularGrid, name: str = "") -> HarmonicTuple:
    """Project every row of F onto H_nu"""
    coeffs = np.array([project_pi_nu(row, nu, grid) for row in np.atleast_2d(F)])
    return HarmonicTuple(d=grid.d, nu=nu, coeffs=coeffs, name=name)


def is_balanced(G: HarmonicTuple, pinned: Sequence[int], designated: int) -> bool:
    """nu >= 3; nu = 2 with G_n = 0; nu = 1 with G_j = 0 on J'"""
    if G.nu >= 3:
        return True
    zero = G.nu == 2 and [designated] or list(pinned)
    return not np.any(G.coeffs[zero])


def balanced_indices(size: int, nu: int, pinned: Sequence[int], designated: int) -> List[int]:
    if nu >= 3:
        return list(range(size))
    excluded = {designated} if nu == 2 else set(pinned)
    return [j for j in range(size) if j not in excluded]


# -- Scalars ----------------------------------------------------------------------

def _span_band(kernel) -> Tuple[float, float]:
    """Range of theta . theta' allowed by the maps in span{L_i, L_j}"""
    r_i, r_j = kernel.radii[kernel.i], kernel.radii[kernel.j]
    lo, hi = -1.0, 1.0
    for k in kernel.in_span:
        a, b = kernel.rows[k, 0], kernel.rows[k, 1]
        level = (kernel.radii[k] ** 2 - a * a * r_i * r_i - b * b * r_j * r_j) / (2 * a * b * r_i * r_j)
        if a * b > 0:
            hi = min(hi, level)
        else:
            lo = max(lo, level)
    return float(np.clip(lo, -1, 1)), float(np.clip(hi, -1, 1))


def cos_band(kernel) -> Optional[Tuple[float, float, float]]:
    """(c, lo, hi) when M_{i,j} = c 1{lo <= theta . theta' <= hi}; None if other maps must be integrated"""
    if kernel.outside_span:
        return None
    return (kernel.c, *_span_band(kernel))


def _band_scalars(c: float, lo: float, hi: float, d: int, degrees: Sequence[int]) -> np.ndarray:
    if lo >= hi:
        return np.zeros(len(degrees))
    values = []
    for nu in degrees:
        if d == 2:
            a_lo, a_hi = np.arccos(lo), np.arccos(hi)
            values.append(2 * (a_lo - a_hi) if nu == 0 else 2.0 / nu * (np.sin(nu * a_lo) - np.sin(nu * a_hi)))
        elif nu == 0:
            values.append(2 * np.pi * (hi - lo))
        else:
            antiderivative = lambda t: (eval_legendre(nu + 1, t) - eval_legendre(nu - 1, t)) / (2 * nu + 1)
            values.append(2 * np.pi * (antiderivative(hi) - antiderivative(lo)))
    return c * np.array(values, dtype=float)


def zonal_profile(fam: LinearFamily, spec: MeasureSpec, i: int, j: int, phi: np.ndarray,
                  kernel=None, samples: int = None, seed: int = None) -> np.ndarray:
    """k(phi) = M_{i,j}(r_i e_1, r_j (cos phi, sin phi, 0, ...))"""
    d = spec.d
    kernel = kernel or kernel_service.pair_kernel(fam, spec.e, d, i, j)
    r = spec.radii
    x = np.zeros(d)
    x[0] = r[i]
    values = []
    for angle in np.atleast_1d(phi):
        y = np.zeros(d)
        y[0], y[1] = r[j] * np.cos(angle), r[j] * np.sin(angle)
        values.append(kernel_service.eval_M(fam, spec.e, d, i, j, x, y, kernel=kernel, samples=samples, seed=seed))
    return np.array(values)


def _quadrature_scalars(fam, spec, i, j, kernel, degrees, samples, seed) -> np.ndarray:
    d = spec.d
    # Monte Carlo kernels are only resolved to sampling accuracy
    tol = 5e-3 if fam.m >= 4 else 1e-5
    lo, hi = _span_band(kernel)
    if lo >= hi:
        return np.zeros(len(degrees))
    previous = None
    for panels in (16, 32, 64, 128):
        phi, w = geometry_service.composite_gauss_legendre(float(np.arccos(hi)), float(np.arccos(lo)), panels, 8)
        k = zonal_profile(fam, spec, i, j, phi, kernel=kernel, samples=samples, seed=seed)
        if d == 2:
            current = np.array([2 * np.sum(w * k * np.cos(nu * phi)) for nu in degrees])
        else:
            current = np.array([2 * np.pi * np.sum(w * k * eval_legendre(nu, np.cos(phi)) * np.sin(phi)) for nu in degrees])
        if previous is not None and np.max(np.abs(current - previous)) <= tol * max(1.0, float(np.max(np.abs(current)))):
            return current
        previous = current
    logger.error(f"Zonal quadrature for pair ({i},{j}) did not settle")
    raise ComputationError(f"quadrature for lambda_{{{i},{j}}} did not converge under refinement")


def pair_scalars(fam: LinearFamily, spec: MeasureSpec, i: int, j: int, degrees: Sequence[int],
                 samples: int = None, seed: int = None) -> np.ndarray:
    """lambda_{i,j}(nu) for every requested degree"""
    d = spec.d
    _check_dimension(d)
    if i == j:
        raise ArgumentError("lambda_{i,j} needs i != j")
    kernel = kernel_service.pair_kernel(fam, spec.e, d, i, j)
    band = cos_band(kernel)
    if band is not None:
        return _band_scalars(*band, d, degrees)
    return _quadrature_scalars(fam, spec, i, j, kernel, degrees, samples, resolve_seed(seed))


def lambda_scalar(fam: LinearFamily, spec: MeasureSpec, i: int, j: int, nu: int, d: int = None) -> float:
    if d is not None and d != spec.d:
        spec = MeasureSpec(e=spec.e, d=d)
    value = float(pair_scalars(fam, spec, i, j, [nu])[0])
    logger.debug(f"lambda_{{{i},{j}}}({nu}) = {value!r}")
    return value


# -- Discretized operators ----------------------------------------------------------

def operator_matrix(fam: LinearFamily, spec: MeasureSpec, i: int, j: int, n_theta: int = 512) -> np.ndarray:
    """
    Circulant discretization of T_{i,j} on n_theta equispaced angles (d=2),
    quadrature weight included: (T g)(theta_a) ~ sum_b K[a, b] g(theta_b).
    """
    if spec.d != 2:
        raise ArgumentError("operator matrices are built for d=2")
    step = 2 * np.pi / n_theta
    offsets = np.arange(n_theta) * step
    kernel = kernel_service.pair_kernel(fam, spec.e, 2, i, j)
    band = cos_band(kernel)
    if band is not None:
        c, lo, hi = band
        # exact cell overlap with {a_hi <= |phi| <= a_lo}, phi taken mod 2 pi
        a_lo, a_hi = float(np.arccos(lo)), float(np.arccos(hi))
        left, right = offsets - step / 2, offsets + step / 2
        row = np.zeros(n_theta)
        for start, stop in ((a_hi, a_lo), (-a_lo, -a_hi), (2 * np.pi - a_lo, 2 * np.pi - a_hi)):
            row += np.clip(np.minimum(right, stop) - np.maximum(left, start), 0.0, None)
        row *= c
    else:
        fine = (np.arange(8) + 0.5) / 8 - 0.5
        row = np.array([
            np.mean(zonal_profile(fam, spec, i, j, offset + fine * step, kernel=kernel)) for offset in offsets
        ]) * step
    index = (np.arange(n_theta)[:, None] - np.arange(n_theta)[None, :]) % n_theta
    return row[index]


def eval_Q_pair(fam: LinearFamily, spec: MeasureSpec, i: int, j: int, F: np.ndarray, G: np.ndarray,
                n_theta: int = 512) -> float:
    """Q_{i,j}(F, G) = double integral of M_{i,j}(r_i theta, r_j theta') F(theta) G(theta')"""
    K = operator_matrix(fam, spec, i, j, n_theta)
    return float(np.asarray(F) @ K @ np.asarray(G)) * 2 * np.pi / n_theta


def eval_Q_direct(G: HarmonicTuple, fam: LinearFamily, spec: MeasureSpec, n_theta: int = 512) -> float:
    """Q by the double surface integral on an equispaced grid (d=2)"""
    grid = _grid(2, n_theta)
    values = G.values(grid.directions)
    return float(sum(
        eval_Q_pair(fam, spec, i, j, values[i], values[j], n_theta)
        for i, j in itertools.combinations(range(G.size), 2)
    ))


# -- Reports ----------------------------------------------------------------------

def _restricted_max(matrix: np.ndarray, index: List[int]) -> float:
    if not index:
        return 0.0
    block = matrix[np.ix_(index, index)]
    return float(np.max(np.linalg.eigvalsh(0.5 * (block + block.T))))


def _tail(degrees: Sequence[int], scalars: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    peak = np.max(np.abs(scalars), axis=1)
    use = (np.array(degrees) >= 1) & (peak > 1e-14)
    if np.count_nonzero(use) < 3:
        return None, None
    slope, intercept = np.polyfit(np.log(np.array(degrees)[use]), np.log(peak[use]), 1)
    return float(-slope), float(np.exp(intercept))


def spectral_report(fam: LinearFamily, spec: MeasureSpec, degrees: Sequence[int] = None,
                    pinned: Sequence[int] = None, designated: int = None, require_strict: bool = True,
                    samples: int = None, seed: int = None) -> SpectralReport:
    """
    Scalars, weights w_j = gamma_j r_j^{1-d}, balanced ratios A_nu and operator norms.

    Raises:
        StructuralError: If strict admissibility fails or some gamma_j is unavailable
    """
    d = spec.d
    _check_dimension(d)
    require_nondegenerate(fam)
    degrees = list(degrees or range(1, settings.NU_MAX + 1))
    if pinned is None or designated is None:
        pinned, designated = select_independent_subset(fam)

    if require_strict:
        certificate = admissibility_service.certify(fam, spec.e, d, with_genericity=False)
        if not certificate.strictly_admissible:
            logger.error(f"Spectral problem requires strict admissibility, got {certificate.verdict.value}")
            raise StructuralError(f"(L, e) is {certificate.verdict.value}; gamma is not available")
    gammas = []
    for j in range(fam.size):
        estimate = kernel_service.gamma(fam, spec.e, d, j, seed=seed)
        if estimate.gamma is None or estimate.gamma <= 0:
            logger.error(f"gamma_{fam.label(j)} unavailable")
            raise StructuralError(f"gamma_{fam.label(j)} is not available")
        gammas.append(estimate.gamma)
    gammas = np.array(gammas)
    weights = gammas * spec.radii ** (1 - d)

    pairs = list(itertools.combinations(range(fam.size), 2))
    scalars = np.column_stack([pair_scalars(fam, spec, i, j, degrees, samples, seed) for i, j in pairs])
    scale = 1.0 / np.sqrt(weights)

    def per_degree(row):
        k, nu = row
        M = np.zeros((fam.size, fam.size))
        for (i, j), value in zip(pairs, scalars[k]):
            M[i, j] = M[j, i] = value
        weighted = 0.5 * scale[:, None] * M * scale[None, :]
        index = balanced_indices(fam.size, nu, pinned, designated)
        return (_restricted_max(weighted, index), _restricted_max(weighted, list(range(fam.size))),
                float(np.max(np.abs(np.linalg.eigvalsh(M)))))

    with ThreadPoolExecutor(max_workers=max(1, settings.MC_WORKERS)) as pool:
        rows = list(pool.map(per_degree, enumerate(degrees)))
    ratios = np.array([r[0] for r in rows])
    full = np.array([r[1] for r in rows])
    norms = np.array([r[2] for r in rows])

    exponent, constant = _tail(degrees, scalars)
    bound = None
    if exponent is not None and exponent > 0:
        bound = 0.5 * (fam.size - 1) * constant * (max(degrees) + 1) ** (-exponent) / float(np.min(weights))

    report = SpectralReport(
        d=d, degrees=degrees, pairs=pairs, scalars=scalars, weights=weights, gammas=gammas,
        ratios=ratios, full_ratios=full, operator_norms=norms, pinned=tuple(pinned), designated=designated,
        tail_exponent=exponent, tail_constant=constant, tail_bound=bound,
    )
    logger.info(f"Spectral report d={d}, degrees {degrees[0]}..{degrees[-1]}: gap {report.gap:.6g}, "
                f"norms {norms[0]:.4g} -> {norms[-1]:.4g}")
    return report


def balanced_gap(fam: LinearFamily, spec: MeasureSpec, d: int = None, pinned: Sequence[int] = None,
                 designated: int = None, nu_max: int = None) -> SpectralReport:
    if d is not None and d != spec.d:
        spec = MeasureSpec(e=spec.e, d=d)
    return spectral_report(fam, spec, range(1, (nu_max or settings.NU_MAX) + 1), pinned, designated)


def eval_Q(G: Union[HarmonicTuple, Sequence[HarmonicTuple]], report: SpectralReport) -> float:
    """
    Q(G) from the per-degree scalars.

    Raises:
        ArgumentError: If the parts of G have different degrees, or the degree is not in the report
    """
    parts = [G] if isinstance(G, HarmonicTuple) else list(G)
    if len({p.nu for p in parts}) != 1:
        raise ArgumentError("Q is evaluated on tuples of a single degree")
    nu = parts[0].nu
    if nu not in report.degrees:
        raise ArgumentError(f"degree {nu} is not in the spectral report")
    coeffs = sum(p.coeffs for p in parts)
    return float(sum(report.scalar(i, j, nu) * coeffs[i] @ coeffs[j] for i, j in report.pairs))


def weighted_norm(G: HarmonicTuple, report: SpectralReport) -> float:
    """sum_j gamma_j r_j^{1-d} ||G_j||^2"""
    return float(report.weights @ G.component_norms_squared())


# -- Named tuples -------------------------------------------------------------------

def named_harmonic(name: str, fam: LinearFamily, spec: MeasureSpec) -> HarmonicTuple:
    """nu1, nu2, nu3 (balanced) or the orbit directions translation and shear"""
    d = spec.d
    _check_dimension(d)
    pinned, designated = select_independent_subset(fam)
    J = fam.size
    if name in ("nu1", "nu2", "nu3"):
        nu = int(name[-1])
        coeffs = np.zeros((J, basis_dimension(d, nu)))
        for j in balanced_indices(J, nu, pinned, designated):
            coeffs[j, 0] = 1.0
        return HarmonicTuple(d=d, nu=nu, coeffs=coeffs, balanced=True, name=name)

    grid = _grid(d, settings.ANGULAR_NODES)
    theta = grid.directions
    if name == "translation":
        v = np.zeros((fam.m, d))
        v[0, 0] = 1.0
        shifts = fam.matrix @ v
        samples = (spec.radii[:, None] ** (d - 1)) * (shifts @ theta.T)
        G = harmonic_from_samples(samples, 1, grid, name)
    elif name == "shear":
        A = np.zeros((d, d))
        A[0, 0], A[1, 1] = 1.0, -1.0
        quadratic = np.einsum("nd,de,ne->n", theta, A, theta)
        samples = (spec.radii[:, None] ** d) * quadratic[None, :]
        G = harmonic_from_samples(samples, 2, grid, name)
    else:
        raise ArgumentError(f"unknown harmonic {name}; choose from nu1, nu2, nu3, translation, shear")
    return G.with_coeffs(G.coeffs, balanced=is_balanced(G, pinned, designated))


# -- Polynomials P_j and P_sharp --------------------------------------------------------

def _basis_polynomials(d: int, nu: int) -> List[sympy.Expr]:
    """The basis of H_nu as homogeneous polynomials, in the order of basis_values"""
    xs = SYMBOLS[:d]
    if d == 2:
        if nu == 0:
            return [1 / sympy.sqrt(2 * sympy.pi)]
        z = sympy.expand((xs[0] + sympy.I * xs[1]) ** nu)
        return [sympy.re(z) / sympy.sqrt(sympy.pi), sympy.im(z) / sympy.sqrt(sympy.pi)]
    x, y, zc = xs
    t = sympy.Symbol("t")
    r2 = x ** 2 + y ** 2 + zc ** 2
    polys = []
    for order in range(0, nu + 1):
        derivative = sympy.Poly(sympy.diff(sympy.legendre(nu, t), t, order), t)
        radial = sum(coeff * zc ** k * r2 ** ((nu - order - k) // 2) for (k,), coeff in derivative.terms())
        norm = sympy.sqrt(sympy.Rational(2 * nu + 1, 4) / sympy.pi * sympy.factorial(nu - order) / sympy.factorial(nu + order))
        if order == 0:
            polys.append(sympy.expand(norm * radial))
            continue
        w = sympy.expand((x + sympy.I * y) ** order)
        sign = (-1) ** order
        polys.append(sympy.expand(sympy.sqrt(2) * norm * sign * sympy.re(w) * radial))
        polys.append(sympy.expand(sympy.sqrt(2) * norm * sign * sympy.im(w) * radial))
    return polys


def harmonic_polynomial(G: HarmonicTuple, j: int) -> sympy.Expr:
    """G_j as a homogeneous polynomial in x1..xd"""
    basis = _basis_polynomials(G.d, G.nu)
    return sympy.expand(sum(sympy.Float(float(c)) * p for c, p in zip(G.coeffs[j], basis)))


def extract_P(G: Union[sympy.Expr, str], r: float, d: int, nu: int = None) -> sympy.Expr:
    """
    Keep the monomials of G odd in x_d, divide by x_d, substitute
    x_d^2 = r^2 - |x'|^2 and scale by r^(2 - d - nu). The result is a
    polynomial in x1..x_{d-1}.
    """
    xs = SYMBOLS[:d]
    expr = sympy.sympify(G, locals={str(s): s for s in xs})
    poly = sympy.Poly(expr, *xs)
    if nu is None:
        nu = poly.total_degree()
    r = sympy.nsimplify(r) if float(r).is_integer() else sympy.Float(float(r))
    rest = sum(x ** 2 for x in xs[:-1])
    total = sympy.Integer(0)
    for exponents, coeff in poly.terms():
        if exponents[-1] % 2 == 0:
            continue
        term = coeff * sympy.Mul(*[x ** e for x, e in zip(xs[:-1], exponents[:-1])])
        total += term * (r ** 2 - rest) ** ((exponents[-1] - 1) // 2)
    return sympy.expand(total * r ** (2 - d - nu))


def p_polynomials(G: HarmonicTuple, spec: MeasureSpec) -> List[sympy.Expr]:
    return [extract_P(harmonic_polynomial(G, j), float(r), G.d, G.nu) for j, r in enumerate(spec.radii)]


def _p_functions(G: HarmonicTuple, spec: MeasureSpec):
    xs = SYMBOLS[:G.d - 1]
    funcs = []
    for P in p_polynomials(G, spec):
        f = sympy.lambdify(xs, P, "numpy")
        funcs.append(lambda y, f=f: np.broadcast_to(np.asarray(f(*y.T), dtype=float), y.shape[:1]))
    return funcs


def p_sharp(G: HarmonicTuple, fam: LinearFamily, spec: MeasureSpec, y_prime: np.ndarray) -> np.ndarray:
    """
    Distance from (P_j(y'_j))_j to Lambda_1 = range of the coefficient matrix.

    y_prime has shape (J, d-1) for one point or (N, J, d-1) for many.
    """
    y = np.asarray(y_prime, dtype=float)
    single = y.ndim == 2
    y = np.atleast_3d(y[None] if single else y)
    if G.is_zero():
        values = np.zeros(len(y))
        return values[0] if single else values
    funcs = _p_functions(G, spec)
    p = np.column_stack([funcs[j](y[:, j, :]) for j in range(fam.size)])
    A = fam.matrix
    residual = p - p @ (A @ np.linalg.pinv(A)).T
    values = np.linalg.norm(residual, axis=1)
    return float(values[0]) if single else values


def p_sharp_l2(G: HarmonicTuple, fam: LinearFamily, spec: MeasureSpec, n: int = 256, seed: int = None) -> float:
    """Integral of P_sharp^2 over the unit sphere of (R^{d-1})^m"""
    dim = fam.m * (G.d - 1)
    if dim == 2:
        angle = 2 * np.pi * np.arange(n) / n
        points = np.column_stack([np.cos(angle), np.sin(angle)])
        area = 2 * np.pi
    else:
        gen = stream(seed, Purpose.ROTATION_SEARCH, (1 << 32) - 1)
        points = gen.normal(size=(16 * n, dim))
        points /= np.linalg.norm(points, axis=1)[:, None]
        area = 2 * np.pi ** (dim / 2) / float(sympy.gamma(sympy.Rational(dim, 2)))
    x_prime = points.reshape(-1, fam.m, G.d - 1)
    y_prime = np.einsum("jm,nmk->njk", fam.matrix, x_prime)
    return float(area * np.mean(p_sharp(G, fam, spec, y_prime) ** 2))


def rotate_tuple(G: HarmonicTuple, A: np.ndarray) -> HarmonicTuple:
    """(G_j o A^{-1})_j, re-projected onto H_nu"""
    grid = _grid(G.d, settings.ANGULAR_NODES)
    values = G.values(grid.directions @ np.asarray(A))
    coeffs = np.array([project_pi_nu(row, G.nu, grid) for row in values])
    return G.with_coeffs(coeffs)


def _trial_rotation(d: int, k: int, seed: int) -> Tuple[np.ndarray, Optional[float]]:
    if k == 0:
        return np.eye(d), 0.0
    if d == 2:
        angle = float(np.mod(2 * np.pi * GOLDEN * k, 2 * np.pi))
        c, s = np.cos(angle), np.sin(angle)
        return np.array([[c, -s], [s, c]]), angle
    gen = stream(seed, Purpose.ROTATION_SEARCH, k)
    return Rotation.random(random_state=gen).as_matrix(), None


def find_rotation_nonvanishing(G: HarmonicTuple, fam: LinearFamily, spec: MeasureSpec,
                               trials: int = None, seed: int = None) -> RotationCertificate:
    """
    First rotation A (identity, then golden-angle steps in d=2 or seeded
    random rotations in d=3) with the L^2 norm of P_sharp(A(G)) above threshold.

    Raises:
        ArgumentError: If G is zero or not balanced
    """
    pinned, designated = select_independent_subset(fam)
    if G.is_zero():
        raise ArgumentError("the rotation search needs a nonzero tuple")
    if not is_balanced(G, pinned, designated):
        raise ArgumentError("the rotation search needs a balanced tuple")
    trials = trials or settings.ROTATION_TRIALS
    seed = resolve_seed(seed)
    threshold = 1e-10 * G.norm_squared()
    best = 0.0
    for k in range(trials):
        A, angle = _trial_rotation(G.d, k, seed)
        value = p_sharp_l2(rotate_tuple(G, A) if k else G, fam, spec, seed=seed)
        best = max(best, value)
        if value > threshold:
            logger.info(f"P_sharp nonvanishing after {k + 1} trials (|P_sharp|^2 = {value:.6g})")
            return RotationCertificate(found=True, rotation=A, angle=angle, trials=k + 1, p_sharp_l2=value)
    logger.warning(f"No rotation with nonvanishing P_sharp in {trials} trials")
    return RotationCertificate(found=False, trials=trials, p_sharp_l2=best)
