# apps/riccati/services/residual.py
"""
Riccati 잔차 norm

X = V K Y K^H V^H 의 잔차는 V (U T^H + T U^H) V^H 로 압축되고,
[U T] = Q R 이면 norm 은 2d_c x 2d_c 행렬 R J R^H 의 norm 과 같습니다
(J 는 block swap). 표준 경우 n 크기 객체를 전혀 만들지 않습니다.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la
from django.conf import settings

from apps.riccati.exceptions import SingularUW
from apps.riccati.services.kernels import (
    as_complex,
    condition_number,
    matrix_norm,
    numerical_rank,
    orth_complement_basis,
)

logger = logging.getLogger(__name__)


def swap_matrix(d: int) -> np.ndarray:
    """[[0, I_d], [I_d, 0]]"""
    eye = np.eye(d, dtype=np.complex128)
    zero = np.zeros((d, d), dtype=np.complex128)
    return np.block([[zero, eye], [eye, zero]])


@dataclass(frozen=True, eq=False)
class ResidualWorkspace:
    """
    Attributes:
        U: range(L)^⊥ basis, W: range(K)^⊥ basis ((j+1)p x d_c)
        Gamma: W (U^H W)^{-1}
        Psi: Ctilde^H Gamma
        T: (j+1)p x d_c
        R: [U T] (또는 E^H V [U T]) 의 economy QR 의 R
    """

    U: np.ndarray
    W: np.ndarray
    Gamma: np.ndarray
    Psi: np.ndarray
    T: np.ndarray
    R: np.ndarray

    @property
    def d_c(self) -> int:
        return self.U.shape[1]

    @property
    def compressed(self) -> np.ndarray:
        """R J R^H"""
        if self.d_c == 0:
            return np.zeros((0, 0), dtype=np.complex128)
        return self.R @ swap_matrix(self.d_c) @ self.R.conj().T

    def norm(self, kind: str = "fro") -> float:
        if self.d_c == 0:
            return 0.0
        return matrix_norm(self.compressed, kind)

    def singular_values(self) -> np.ndarray:
        if self.d_c == 0:
            return np.zeros(0)
        return la.svdvals(self.compressed)

    def rank(self, rtol: Optional[float] = None) -> int:
        return numerical_rank(self.singular_values(), rtol)


def build_workspace(K, H, L, Ctilde, Y, EhV: Optional[np.ndarray] = None) -> ResidualWorkspace:
    """
    U, W, Gamma, Psi, T 를 만들고 [U T] 를 압축

    K 자리에는 truncation 의 Qhat 도 올 수 있습니다 (d_c = rows - cols).
    EhV 가 주어지면 E^H V [U T] 를 QR 합니다 (일반화 경우).

    Raises:
        SingularUW: cond(U^H W) > UW_COND_MAX
    """
    K, H, L, Ctilde, Y = (as_complex(M) for M in (K, H, L, Ctilde, Y))
    rows, cols = K.shape
    d_c = rows - cols
    if d_c == 0:
        empty = np.zeros((rows, 0), dtype=np.complex128)
        return ResidualWorkspace(
            U=empty,
            W=empty,
            Gamma=empty,
            Psi=np.zeros((Ctilde.shape[1], 0), dtype=np.complex128),
            T=empty,
            R=np.zeros((0, 0), dtype=np.complex128),
        )

    U = orth_complement_basis(L)
    W = orth_complement_basis(K)
    UhW = U.conj().T @ W
    cond_UW = condition_number(UhW)
    if cond_UW > settings.UW_COND_MAX:
        raise SingularUW(f"cond(U^H W) = {cond_UW:.3e}")
    logger.debug(f"[Residual] d_c={d_c} cond(U^H W)={cond_UW:.3e}")

    # Gamma = W (U^H W)^{-1}  →  Gamma^H = (W^H U)^{-1} W^H
    Gamma = la.solve(W.conj().T @ U, W.conj().T).conj().T
    Psi = Ctilde.conj().T @ Gamma
    T = K @ (Y @ (H.conj().T @ Gamma)) + (Ctilde - 0.5 * U @ Psi.conj().T) @ Psi

    UT = np.hstack([U, T])
    if EhV is not None:
        UT = EhV @ UT
    R = la.qr(UT, mode="r")[0]
    if R.shape[0] < 2 * d_c:
        R = np.vstack([R, np.zeros((2 * d_c - R.shape[0], 2 * d_c), dtype=R.dtype)])
    return ResidualWorkspace(U=U, W=W, Gamma=Gamma, Psi=Psi, T=T, R=R[: 2 * d_c])


def _EhV(brad, E):
    if E is None:
        return None
    return E.conj().T @ brad.V


def residual_workspace(brad, L, Y, E=None) -> ResidualWorkspace:
    return build_workspace(brad.K, brad.H, L, brad.Ctilde, Y, EhV=_EhV(brad, E))


def residual_norm(brad, L, Y, kind: str = "fro") -> float:
    """
    ||R(X_j)|| (표준 CARE, n 크기 연산 없음)

    Raises:
        SingularUW
    """
    return residual_workspace(brad, L, Y).norm(kind)


def residual_norm_generalized(brad, L, Y, E, kind: str = "fro") -> float:
    """
    일반화 CARE 의 ||E^H V (U T^H + T U^H) V^H E||

    E 가 None 이면 residual_norm 과 같습니다.
    """
    return residual_workspace(brad, L, Y, E=E).norm(kind)


def residual_rank_profile(brad, L, Y, E=None) -> np.ndarray:
    """R J R^H 의 특이값 (2 d_c 개)"""
    return residual_workspace(brad, L, Y, E=E).singular_values()


def dense_residual_matrix(problem, X) -> np.ndarray:
    """A^H X E + E^H X A + C^H C - E^H X B B^H X E (dense)"""
    A, E, B, C = problem.dense()
    X = as_complex(X)
    AhXE = A.conj().T @ X @ E
    EhXB = E.conj().T @ X @ B
    return AhXE + AhXE.conj().T + C.conj().T @ C - EhXB @ EhXB.conj().T


def dense_residual_oracle(problem, X, kind: str = "fro") -> float:
    """
    dense 잔차 norm (검증용)

    Raises:
        CapExceeded: n > DENSE_CAP
    """
    return matrix_norm(dense_residual_matrix(problem, X), kind)
