# services/admissibility_service.py

"""
The polytope K_e, admissibility certificates and genericity.

For d > 1 every question is reduced to d = 1 with measures e_j^{1/d}, so
certify(fam, e, d) and certify(fam, e^{1/d}, 1) coincide.
"""

import itertools
import logging
from typing import List, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from config import settings
from models.family import LinearFamily
from models.measures import unit_ball_volume
from models.polytope import (
    AdmissibilityCertificate,
    FaceWitness,
    GenericityReport,
    PolytopeH,
    Verdict,
)
from services import geometry_service, kernel_service
from services.errors import ArgumentError, ComputationError, StructuralError
from services.family_service import numeric_rank, require_nondegenerate

logger = logging.getLogger("admissibility_service")


def _positive(e: Sequence[float]) -> np.ndarray:
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if np.any(e <= 0):
        logger.error(f"Nonpositive measures: {e.tolist()}")
        raise ArgumentError("measures must be positive")
    return e


def dimension_reduce(e: Sequence[float], d: int) -> np.ndarray:
    """Componentwise e_j^{1/d}"""
    if d < 1:
        raise ArgumentError("d must be at least 1")
    return _positive(e) ** (1.0 / d)


def radii(e: Sequence[float], d: int) -> np.ndarray:
    """r_j = (e_j / omega_d)^{1/d}"""
    return (_positive(e) / unit_ball_volume(d)) ** (1.0 / d)


def build_K_e(fam: LinearFamily, e: Sequence[float], d: int = 1) -> PolytopeH:
    """{x : |L_j^1(x)| <= b_j} with b_j = e_j^{1/d} / 2"""
    e = _positive(e)
    if len(e) != fam.size:
        raise ArgumentError(f"{fam.size} maps but {len(e)} measures")
    return PolytopeH(rows=fam.matrix, bounds=dimension_reduce(e, d) / 2)


def _face_witness(poly: PolytopeH, k: int) -> FaceWitness:
    rows, b = poly.rows, poly.bounds
    m = poly.m
    others = [i for i in range(len(b)) if i != k]
    # variables (x, s): maximize s with +-rows_i x + s <= b_i on the face rows_k x = sign b_k
    A_ub = np.vstack([
        np.column_stack([rows[others], np.ones(len(others))]),
        np.column_stack([-rows[others], np.ones(len(others))]),
    ])
    b_ub = np.concatenate([b[others], b[others]])
    objective = np.zeros(m + 1)
    objective[-1] = 1.0

    best = None
    for sign in (1, -1):
        A_eq = np.append(rows[k], 0.0)[None, :]
        value, z = geometry_service.lp_maximize(objective, A_ub, b_ub, A_eq=A_eq, b_eq=[sign * b[k]])
        if value is None:
            continue
        if best is None or value > best[1] + 1e-15:
            best = (sign, value, z[:m])

    tol = settings.SLACK_THRESHOLD
    if best is None:
        return FaceWitness(index=k, sign=1, reached=False, strict=False)
    sign, value, x = best
    return FaceWitness(
        index=k,
        sign=sign,
        point=tuple(float(v) for v in x),
        slack=float(value),
        slacks=tuple(float(v) for v in poly.slacks(x)),
        reached=bool(value >= -tol),
        strict=bool(value > tol),
    )


def _check_witness(poly: PolytopeH, witness: FaceWitness) -> None:
    if witness.point is None:
        return
    x = np.array(witness.point)
    face_value = float(poly.rows[witness.index] @ x)
    scale = max(1.0, float(np.max(poly.bounds)))
    if abs(face_value - witness.sign * poly.bounds[witness.index]) > 1e-8 * scale:
        logger.error(f"Witness for face {witness.index} is off its face by {face_value}")
        raise ComputationError(f"LP witness for face {witness.index} does not lie on the face")


def face_witnesses(fam: LinearFamily, e: Sequence[float], d: int = 1) -> List[FaceWitness]:
    poly = build_K_e(fam, e, d)
    witnesses = [_face_witness(poly, k) for k in range(fam.size)]
    for witness in witnesses:
        _check_witness(poly, witness)
    return witnesses


def certify(fam: LinearFamily, e: Sequence[float], d: int = 1, with_genericity: bool = True) -> AdmissibilityCertificate:
    """
    Admissibility verdict with per-face witnesses and boundary derivatives.

    A face |L_k| = b_k is reached when its best minimum slack is >= -tol and
    strictly reached when it is > tol. Strict admissibility also needs
    D^-K_k < 0 at the boundary value for every k, evaluated in the reduced
    d=1 problem.

    Raises:
        StructuralError: If the family is degenerate
        ComputationError: If an LP fails to solve
    """
    require_nondegenerate(fam)
    reduced = dimension_reduce(e, d)
    poly = build_K_e(fam, reduced, 1)
    witnesses = face_witnesses(fam, reduced, 1)
    derivatives = [kernel_service.left_derivative(fam, reduced, 1, k) for k in range(fam.size)]

    slacks = [w.slack if w.slack is not None else float("-inf") for w in witnesses]
    margin = float(min(slacks))
    if not all(w.reached for w in witnesses):
        verdict = Verdict.INADMISSIBLE
    elif all(w.strict for w in witnesses) and all(dv.applicable and dv.strictly_negative for dv in derivatives):
        verdict = Verdict.STRICTLY_ADMISSIBLE
    else:
        verdict = Verdict.WEAKLY_ADMISSIBLE

    genericity = None
    if with_genericity and fam.m <= 3:
        genericity = check_generic(fam, reduced, 1)

    logger.info(f"Certified {fam.size} maps with e={list(map(float, np.atleast_1d(e)))}, d={d}: "
                f"{verdict.value}, margin {margin:.6g}")
    return AdmissibilityCertificate(
        verdict=verdict,
        d=d,
        bounds=tuple(float(v) for v in poly.bounds),
        witnesses=witnesses,
        derivatives=derivatives,
        genericity=genericity,
        margin=margin,
    )


def admissibility_margin(fam: LinearFamily, e: Sequence[float], d: int = 1) -> float:
    """Minimum over faces of the best slack; perturbations of e below it keep the verdict"""
    return min(
        w.slack if w.slack is not None else float("-inf")
        for w in face_witnesses(fam, dimension_reduce(e, d), 1)
    )


def check_generic(fam: LinearFamily, e: Sequence[float], d: int = 1) -> GenericityReport:
    """
    Enumerate the vertices of K_e and count active constraints at each.

    Raises:
        ArgumentError: If m > 3
        StructuralError: If K_e is unbounded
    """
    m = fam.m
    if m > 3:
        raise ArgumentError("vertex enumeration is limited to m <= 3")
    poly = build_K_e(fam, e, d)
    rows, b = poly.rows, poly.bounds
    if numeric_rank(rows) < m:
        logger.error("K_e is unbounded: the maps have a common kernel")
        raise StructuralError("unbounded polytope")

    scale = max(1.0, float(np.max(b)))
    tol = 1e-9 * scale
    vertices = []
    for subset in itertools.combinations(range(len(b)), m):
        block = rows[list(subset)]
        if numeric_rank(block) < m:
            continue
        inv = np.linalg.inv(block)
        for signs in itertools.product((1.0, -1.0), repeat=m):
            x = inv @ (np.array(signs) * b[list(subset)])
            if not poly.contains(x, tol):
                continue
            if any(np.max(np.abs(x - v)) <= tol for v in vertices):
                continue
            vertices.append(x)

    if not vertices:
        raise StructuralError("no vertices found; K_e is degenerate")
    active = [int(np.sum(np.abs(np.abs(rows @ v) - b) <= tol)) for v in vertices]
    try:
        volume = float(ConvexHull(np.array(vertices)).volume) if m >= 2 else float(2 * np.max(np.abs(vertices)))
    except QhullError as e:
        logger.error(f"Convex hull failed: {e}")
        raise ComputationError(f"convex hull of K_e failed: {e}")

    generic = all(count == m for count in active)
    logger.info(f"K_e has {len(vertices)} vertices, volume {volume:.6g}, generic={generic}")
    return GenericityReport(
        generic=generic,
        vertices=[tuple(float(c) for c in v) for v in vertices],
        active_counts=active,
        volume=volume,
    )
