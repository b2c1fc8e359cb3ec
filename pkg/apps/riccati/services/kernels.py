# apps/riccati/services/kernels.py
"""
선형대수 primitive

다른 모든 서비스 모듈은 행렬 분해를 여기 함수들로만 수행합니다.
모든 계산은 complex128 로 진행합니다 (실수 입력도 동일).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from django.conf import settings

from apps.riccati.exceptions import (
    DimensionMismatch,
    NonHermitianInput,
    RankDeficient,
    ReorderingFailure,
    ShiftHitsSpectrum,
)

logger = logging.getLogger(__name__)


def as_complex(M) -> np.ndarray:
    return np.asarray(M, dtype=np.complex128)


def thin_qr(M) -> Tuple[np.ndarray, np.ndarray]:
    """
    economy QR, R 대각은 실수 비음수로 정규화

    rank 부족은 작은 R 대각으로만 드러나며, 판단은 호출자가 합니다.
    """
    M = as_complex(M)
    a, b = M.shape
    if a < b:
        raise DimensionMismatch(f"thin_qr needs a tall matrix, got {a}x{b}")
    Q, R = la.qr(M, mode="economic")
    diag = np.diag(R)
    phase = np.ones(b, dtype=np.complex128)
    nonzero = np.abs(diag) > 0
    phase[nonzero] = diag[nonzero] / np.abs(diag[nonzero])
    return Q * phase, np.conj(phase)[:, None] * R


def hermitian_eig(M, tol: float = None) -> Tuple[np.ndarray, np.ndarray]:
    """Hermitian 고유분해, 고유값 내림차순"""
    M = as_complex(M)
    tol = settings.HERMITIAN_RTOL if tol is None else tol
    scale = la.norm(M, "fro")
    if la.norm(M - M.conj().T, "fro") > tol * scale:
        raise NonHermitianInput()
    eigenvalues, Q = la.eigh(0.5 * (M + M.conj().T))
    return eigenvalues[::-1], Q[:, ::-1]


def ordered_schur(
    M, select: Callable[[complex], bool]
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    complex Schur form M = Q T Q^H, select 를 만족하는 고유값을 앞쪽으로 정렬

    Returns:
        (Q, T, k): k 는 선택된 고유값 개수
    """
    M = as_complex(M)
    try:
        T, Q, k = la.schur(M, output="complex", sort=select)
    except (la.LinAlgError, ValueError) as e:
        raise ReorderingFailure(f"Schur reordering failed: {e}")

    diag = np.diag(T)
    leading = [bool(select(value)) for value in diag[:k]]
    trailing = [bool(select(value)) for value in diag[k:]]
    if not all(leading) or any(trailing):
        raise ReorderingFailure("reordered Schur form violates the selection")
    return Q, T, int(k)


@dataclass(frozen=True, eq=False)
class SparseLU:
    """
    sparse LU (SuperLU) 핸들

    분해 후에는 불변이며, 여러 스레드에서 동시에 solve 해도 됩니다.
    """

    lu: spla.SuperLU
    n: int

    def solve(self, rhs) -> np.ndarray:
        """M X = rhs"""
        return self.lu.solve(as_complex(rhs))

    def solve_adjoint(self, rhs) -> np.ndarray:
        """M^H X = rhs"""
        return self.lu.solve(as_complex(rhs), trans="H")


def sparse_lu(M, rtol: float = None) -> Optional[SparseLU]:
    """
    M 의 sparse LU. 수치적으로 singular 이면 None

    singular 판정: SuperLU 가 exactly singular 를 보고하거나
    min|diag(U)| < rtol * max|diag(U)|.
    """
    rtol = settings.SHIFT_SINGULAR_RTOL if rtol is None else rtol
    M = sp.csc_matrix(M, dtype=np.complex128)
    n = M.shape[0]
    if M.nnz == 0:
        return None
    try:
        lu = spla.splu(M)
    except RuntimeError:
        return None

    diag = np.abs(lu.U.diagonal())
    if diag.size == 0 or diag.max() == 0 or diag.min() < rtol * diag.max():
        return None
    return SparseLU(lu=lu, n=n)


@dataclass(frozen=True, eq=False)
class ShiftedFactorization:
    """
    A^H - pole * E^H 의 분해

    (A - conj(pole) E) 를 LU 분해하고 adjoint solve 로 적용합니다.
    """

    pole: complex
    n: int
    lu: SparseLU

    def solve(self, rhs) -> np.ndarray:
        """(A^H - pole E^H) X = rhs"""
        return self.lu.solve_adjoint(rhs)


def make_shifted_factorization(A, E, pole: complex) -> ShiftedFactorization:
    """
    Args:
        A: n x n sparse
        E: n x n sparse 또는 None (identity)
        pole: rational Krylov pole

    Raises:
        ShiftHitsSpectrum: pole 이 (A^H, E^H) 의 스펙트럼에 (수치적으로) 걸림
    """
    pole = complex(pole)
    A = sp.csc_matrix(A, dtype=np.complex128)
    n = A.shape[0]
    E = sp.identity(n, dtype=np.complex128, format="csc") if E is None else E
    lu = sparse_lu(A - np.conj(pole) * sp.csc_matrix(E, dtype=np.complex128))
    if lu is None:
        raise ShiftHitsSpectrum(
            f"A^H - ({pole:.6g}) E^H is numerically singular", pole=pole
        )
    return ShiftedFactorization(pole=pole, n=n, lu=lu)


def orth_complement_basis(M, rtol: float = None) -> np.ndarray:
    """
    range(M)^⊥ 의 orthonormal basis (full QR 의 뒤쪽 d - q 열)

    Raises:
        RankDeficient: 최소 R 대각 < rtol * 최대 R 대각
    """
    M = as_complex(M)
    rtol = settings.RANK_RTOL if rtol is None else rtol
    d, q = M.shape
    if q > d:
        raise DimensionMismatch(f"complement of a {d}x{q} matrix is undefined")
    Q, R = la.qr(M, mode="full")
    if q > 0:
        diag = np.abs(np.diag(R))
        if diag.max() == 0 or diag.min() < rtol * diag.max():
            raise RankDeficient(
                f"smallest R diagonal {diag.min():.3e} vs largest {diag.max():.3e}"
            )
    return Q[:, q:]


def fro_norm(M) -> float:
    if sp.issparse(M):
        return float(spla.norm(M, "fro"))
    return float(la.norm(as_complex(M), "fro"))


def spectral_norm(M) -> float:
    M = as_complex(M)
    if M.size == 0:
        return 0.0
    return float(la.norm(M, 2))


def spectral_radius(M) -> float:
    M = as_complex(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(la.eigvals(M))))


def matrix_norm(M, kind: str = "fro") -> float:
    """kind: 'fro' | '2'"""
    return fro_norm(M) if kind == "fro" else spectral_norm(M)


def numerical_rank(singular_values, rtol: float = None) -> int:
    rtol = settings.RANK_RTOL if rtol is None else rtol
    singular_values = np.asarray(singular_values)
    if singular_values.size == 0 or singular_values.max() == 0:
        return 0
    return int(np.sum(singular_values > rtol * singular_values.max()))


def condition_number(M) -> float:
    """2-norm 조건수 (singular 이면 inf)"""
    s = la.svdvals(as_complex(M))
    if s.size == 0:
        return 1.0
    if s.min() == 0:
        return np.inf
    return float(s.max() / s.min())
