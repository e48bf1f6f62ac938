"""
Dense complex matrix kernels.

Matrices are ``numpy.ndarray`` objects of dtype ``complex128``; every public
function accepts anything ``as_cmatrix`` can convert. Norms are spectral
(largest singular value) unless stated otherwise.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalFailure, SingularMatrixError

logger = logging.getLogger(__name__)

_SVD_DRIVERS = ("gesdd", "gesvd")


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """
    Convert ``a`` to a 2-D complex128 array with finite entries.

    Args:
        a: array-like input
        name: label used in error messages

    Returns:
        A new complex128 array

    Raises:
        InvalidInputError: if the input is not 2-D, is empty, or has NaN/Inf entries
    """
    try:
        mat = np.array(a, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name} is not a numeric matrix: {e}") from e
    if mat.ndim != 2 or mat.shape[0] == 0 or mat.shape[1] == 0:
        raise InvalidInputError(f"{name} must be a non-empty 2-D matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return mat


def _require_square(mat: np.ndarray, name: str) -> None:
    if mat.shape[0] != mat.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {mat.shape}")


def svd(T) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Full singular value decomposition ``T = U diag(S) V*``.

    Returns:
        (U, S, V) with S descending and V (not V*) returned

    Raises:
        NumericalFailure: if both LAPACK drivers fail to converge;
            ``iterations`` holds the number of driver attempts
    """
    mat = as_cmatrix(T)
    for attempt, driver in enumerate(_SVD_DRIVERS, 1):
        try:
            U, S, Vh = scipy.linalg.svd(mat, full_matrices=True, lapack_driver=driver)
            return U, S, Vh.conj().T
        except (np.linalg.LinAlgError, ValueError) as e:
            logger.warning(f"SVD driver {driver} failed: {e}")
    raise NumericalFailure("SVD did not converge", iterations=len(_SVD_DRIVERS))


def singular_values(T) -> np.ndarray:
    mat = as_cmatrix(T)
    try:
        return scipy.linalg.svdvals(mat)
    except (np.linalg.LinAlgError, ValueError):
        return svd(mat)[1]


def op_norm(T) -> float:
    """Operator 2-norm, i.e. the largest singular value."""
    return float(singular_values(T)[0])


def entrywise_norm_bounds(T) -> Tuple[float, float]:
    """
    Elementary bounds ``max|t_ij| <= ||T|| <= n^2 max|t_ij|`` for an n x n matrix.

    Returns:
        (lower, upper)
    """
    mat = as_cmatrix(T)
    _require_square(mat, "T")
    n = mat.shape[0]
    peak = float(np.max(np.abs(mat)))
    return peak, n * n * peak


def direct_sum(blocks: Sequence) -> np.ndarray:
    """Block-diagonal matrix ``B_1 (+) ... (+) B_d``."""
    if len(blocks) == 0:
        raise InvalidInputError("direct_sum needs at least one block")
    mats = [as_cmatrix(b, name=f"block {k}") for k, b in enumerate(blocks)]
    for k, mat in enumerate(mats):
        _require_square(mat, f"block {k}")
    return scipy.linalg.block_diag(*mats).astype(np.complex128)


def solve(A, B, tol_rank: float = 1e-9) -> np.ndarray:
    """
    Solve ``A X = B`` for square, numerically invertible A.

    Args:
        A: square coefficient matrix
        B: right-hand side with as many rows as A
        tol_rank: A counts as singular when its smallest singular value is
            at most ``tol_rank * ||A||``

    Returns:
        X

    Raises:
        SingularMatrixError: if A is numerically singular
    """
    a = as_cmatrix(A, "A")
    b = as_cmatrix(B, "B")
    _require_square(a, "A")
    if b.shape[0] != a.shape[0]:
        raise InvalidInputError(f"B has {b.shape[0]} rows, A is {a.shape[0]}x{a.shape[0]}")
    s = singular_values(a)
    if s[-1] <= tol_rank * s[0]:
        raise SingularMatrixError(
            f"Matrix is numerically singular (smallest singular value {s[-1]:.3e}, norm {s[0]:.3e})",
            smallest_singular_value=float(s[-1]),
        )
    try:
        return scipy.linalg.solve(a, b)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Linear solve failed: {e}") from e


def inverse(A, tol_rank: float = 1e-9) -> np.ndarray:
    a = as_cmatrix(A, "A")
    return solve(a, np.eye(a.shape[0], dtype=np.complex128), tol_rank=tol_rank)


def condition_number(A, tol_rank: float = 1e-9) -> float:
    """``||A|| ||A^-1||``."""
    return op_norm(A) * op_norm(inverse(A, tol_rank=tol_rank))


def commutator_residual(S, T) -> float:
    """Scaled commutator ``||ST - TS|| / (1 + ||S|| ||T||)``; zero iff S and T commute."""
    s = as_cmatrix(S, "S")
    t = as_cmatrix(T, "T")
    _require_square(s, "S")
    if s.shape != t.shape:
        raise InvalidInputError(f"Size mismatch: {s.shape} vs {t.shape}")
    return op_norm(s @ t - t @ s) / (1.0 + op_norm(s) * op_norm(t))


def conjugate(Y, T, Y_inv=None) -> np.ndarray:
    """``Y T Y^-1``; pass ``Y_inv`` to reuse a known inverse."""
    y = as_cmatrix(Y, "Y")
    if Y_inv is None:
        Y_inv = inverse(y)
    return y @ as_cmatrix(T, "T") @ Y_inv


def orthonormalize(basis) -> np.ndarray:
    """Orthonormal basis (economic QR) of the column span of a full-rank ``basis``."""
    q, _ = scipy.linalg.qr(as_cmatrix(basis, "basis"), mode="economic")
    return q


def restrict(T, basis: np.ndarray) -> np.ndarray:
    """Matrix of T on the span of the orthonormal columns of ``basis``: ``B* T B``."""
    return basis.conj().T @ as_cmatrix(T, "T") @ basis


def numerical_kernel(A, cutoff: float) -> np.ndarray:
    """
    Orthonormal basis of the numerical null space of A.

    Singular values at most ``cutoff`` count as zero. The result has shape
    (cols, k), possibly with k = 0.
    """
    _, S, V = svd(A)
    cols = V.shape[1]
    padded = np.zeros(cols)
    padded[: len(S)] = S
    return V[:, padded <= cutoff]


def phase_normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit length with its largest-modulus entry real and positive."""
    v = np.asarray(v, dtype=np.complex128)
    peak = v[np.argmax(np.abs(v))]
    return v * (np.conj(peak) / abs(peak)) / np.linalg.norm(v)


def unitary_completion(v: np.ndarray) -> np.ndarray:
    """
    Unitary matrix whose first column is the unit vector ``v``.

    Built from the Householder reflector LAPACK produces for the QR
    factorization of ``v``; the first column is rephased to equal ``v``.
    """
    v = np.asarray(v, dtype=np.complex128).reshape(-1, 1)
    q, r = scipy.linalg.qr(v, mode="full")
    phase = r[0, 0] / abs(r[0, 0]) if abs(r[0, 0]) > 0 else 1.0
    q[:, 0] = q[:, 0] * phase
    return q


def block_slices(dims: Sequence[int]) -> List[slice]:
    """Consecutive index slices for blocks of the given sizes."""
    out, start = [], 0
    for d in dims:
        out.append(slice(start, start + d))
        start += d
    return out
