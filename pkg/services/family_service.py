# services/family_service.py

"""
Validation, evaluation and symmetry actions for linear families.
"""

import itertools
import logging
from typing import Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from config import settings
from models.family import FiberChart, LinearFamily, NondegeneracyReport
from services.errors import ArgumentError, StructuralError

logger = logging.getLogger("family_service")


def numeric_rank(matrix: np.ndarray, rtol: float = None) -> int:
    """Rank from singular values, relative to the largest one"""
    rtol = settings.RANK_RTOL if rtol is None else rtol
    if matrix.size == 0:
        return 0
    singular = np.linalg.svd(np.atleast_2d(matrix), compute_uv=False)
    if singular[0] == 0:
        return 0
    return int(np.sum(singular > rtol * singular[0]))


def _proportional(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    u = a / np.linalg.norm(a)
    v = b / np.linalg.norm(b)
    minors = np.outer(u, v) - np.outer(v, u)
    return bool(np.max(np.abs(minors)) < tol)


def validate_nondegenerate(fam: LinearFamily) -> NondegeneracyReport:
    """
    Check the three nondegeneracy conditions separately.

    Args:
        fam: The linear family

    Returns:
        NondegeneracyReport with one flag per condition and the offending indices

    Raises:
        StructuralError: If there are fewer than m+1 maps
    """
    A = fam.matrix
    n, m = A.shape
    if n < m + 1:
        logger.error(f"Family with {n} maps in m={m} variables cannot be nondegenerate")
        raise StructuralError(f"need at least m+1={m + 1} maps, got {n}")

    norms = np.linalg.norm(A, axis=1)
    zero_rows = [j for j in range(n) if norms[j] == 0.0]

    proportional = []
    for i, j in itertools.combinations(range(n), 2):
        if i in zero_rows or j in zero_rows:
            continue
        if _proportional(A[i], A[j], settings.PROPORTIONAL_TOL):
            proportional.append((i, j))

    deficient = [
        j for j in range(n)
        if numeric_rank(np.delete(A, j, axis=0)) < m
    ]

    report = NondegeneracyReport(
        nonzero_rows=not zero_rows,
        pairwise_independent=not proportional,
        complements_full_rank=not deficient,
        zero_rows=zero_rows,
        proportional_pairs=proportional,
        rank_deficient_complements=deficient,
        rank_tolerance=settings.RANK_RTOL,
    )
    logger.debug(f"Nondegeneracy of {n}x{m} family: passed={report.passed}")
    return report


def require_nondegenerate(fam: LinearFamily) -> None:
    report = validate_nondegenerate(fam)
    if not report.passed:
        logger.error(f"Degenerate family: {report.model_dump()}")
        raise StructuralError(
            f"family is degenerate: zero rows {report.zero_rows}, "
            f"proportional pairs {report.proportional_pairs}, "
            f"rank-deficient complements {report.rank_deficient_complements}"
        )


def _as_blocks(fam: LinearFamily, x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size != fam.m * d:
        raise ArgumentError(f"expected a point with {fam.m} blocks of length {d}, got {x.size} entries")
    return x.reshape(fam.m, d)


def eval_L(fam: LinearFamily, j: int, x, d: int = None) -> np.ndarray:
    """L_j^d(x) = sum_i a_{i,j} x_i, blockwise"""
    d = fam.dim_d if d is None else d
    if not 0 <= j < fam.size:
        raise ArgumentError(f"index {j} outside 0..{fam.size - 1}")
    return fam.matrix[j] @ _as_blocks(fam, x, d)


def lift_points(fam: LinearFamily, X: np.ndarray) -> np.ndarray:
    """Apply every L_j to a batch of points X of shape (n, m, d); returns (n, |J|, d)"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 3 or X.shape[1] != fam.m:
        raise ArgumentError(f"expected points of shape (n, {fam.m}, d), got {X.shape}")
    return np.einsum("jm,nmd->njd", fam.matrix, X)


def apply_dilation_action(fam: LinearFamily, r: Sequence[float]) -> LinearFamily:
    """Scale row j by r_j"""
    r = np.asarray(r, dtype=float)
    if r.shape != (fam.size,):
        raise ArgumentError(f"need {fam.size} scale factors, got shape {r.shape}")
    if np.any(r <= 0):
        raise ArgumentError("dilation factors must be positive")
    return fam.with_coeffs(fam.matrix * r[:, None])


def apply_glm_action(fam: LinearFamily, A) -> LinearFamily:
    """Right action coeffs -> coeffs . A of an invertible m x m matrix"""
    A = np.asarray(A, dtype=float)
    if A.shape != (fam.m, fam.m):
        raise ArgumentError(f"need an {fam.m}x{fam.m} matrix, got shape {A.shape}")
    scale = max(float(np.max(np.abs(A))), 1.0)
    if abs(np.linalg.det(A)) <= settings.PROPORTIONAL_TOL * scale ** fam.m:
        raise ArgumentError("matrix is singular")
    return fam.with_coeffs(fam.matrix @ A)


def select_independent_subset(fam: LinearFamily) -> Tuple[Tuple[int, ...], int]:
    """Lexicographically first J' of m independent rows, and n = min J'"""
    A = fam.matrix
    for subset in itertools.combinations(range(fam.size), fam.m):
        if numeric_rank(A[list(subset)]) == fam.m:
            return subset, subset[0]
    raise StructuralError("no m linearly independent maps")


def coordinate_chart(fam: LinearFamily) -> FiberChart:
    """x = H u with L_j(Hu) = u_j for j in J'"""
    subset, _ = select_independent_subset(fam)
    A = fam.matrix
    H = np.linalg.inv(A[list(subset)])
    return FiberChart(
        pinned=subset,
        H=H,
        rows=A @ H,
        jacobian=abs(float(np.linalg.det(H))),
    )


def fiber_chart(fam: LinearFamily, j: int) -> FiberChart:
    """x = H u with L_j(Hu) = u_1 and the remaining u orthonormal to row j"""
    A = fam.matrix
    a = A[j]
    norm2 = float(a @ a)
    if norm2 == 0.0:
        raise StructuralError(f"map {fam.label(j)} is zero")
    H = np.column_stack([a / norm2, null_space(a[None, :])])
    return FiberChart(
        pinned=(j,),
        H=H,
        rows=A @ H,
        jacobian=abs(float(np.linalg.det(H))),
    )


def pair_chart(fam: LinearFamily, i: int, j: int) -> FiberChart:
    """
    x = H u with L_i(Hu) = u_1 and L_j(Hu) = u_2.

    Also splits the other indices into those whose maps lie in span{L_i, L_j}
    and the rest.
    """
    if i == j:
        raise ArgumentError("pair kernels need two distinct indices")
    A = fam.matrix
    pair = A[[i, j]]
    if numeric_rank(pair) < 2:
        raise StructuralError(f"maps {fam.label(i)} and {fam.label(j)} are proportional")
    H = np.column_stack([np.linalg.pinv(pair), null_space(pair)])
    in_span, outside = [], []
    for k in range(fam.size):
        if k in (i, j):
            continue
        if numeric_rank(np.vstack([pair, A[k]])) == 2:
            in_span.append(k)
        else:
            outside.append(k)
    return FiberChart(
        pinned=(i, j),
        H=H,
        rows=A @ H,
        jacobian=abs(float(np.linalg.det(H))),
        in_span=tuple(in_span),
        outside_span=tuple(outside),
    )
