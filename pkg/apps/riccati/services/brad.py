# apps/riccati/services/brad.py
"""
generalized block rational Arnoldi decomposition (BRAD)

    A^H V K = E^H V H

V 는 n x (j+1)p orthonormal, K / H 는 (j+1)p x jp block upper Hessenberg,
C^H = E^H V Ctilde. 값은 불변이며 extend 는 새 값을 돌려줍니다.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la
from django.conf import settings

from apps.riccati.exceptions import Breakdown, RankDeficient, RankDeficientC
from apps.riccati.services.kernels import (
    ShiftedFactorization,
    condition_number,
    make_shifted_factorization,
    sparse_lu,
    thin_qr,
)
from apps.riccati.services.problem import CareProblem
from apps.riccati.services.shifts import shift_to_pole

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Brad:
    """
    Attributes:
        problem: 원 문제 (A, E, B 참조)
        blocks: V 의 열 블록들 (이전 값과 공유)
        K, H: (j+1)p x jp 계수 행렬 (invariant breakdown 후에는 정사각)
        Ctilde: (j+1)p x p, C^H = E^H V Ctilde
        R0: p x p 초기 QR 의 R
        VhB: V^H B, 블록마다 누적
        shifts: 소비한 shift (pole 은 -shift)
    """

    problem: CareProblem
    blocks: Tuple[np.ndarray, ...]
    K: np.ndarray
    H: np.ndarray
    Ctilde: np.ndarray
    R0: np.ndarray
    VhB: np.ndarray
    shifts: Tuple[complex, ...] = ()
    invariant: bool = field(default=False)

    @cached_property
    def V(self) -> np.ndarray:
        return np.hstack(self.blocks)

    @property
    def j(self) -> int:
        return len(self.shifts)

    @property
    def p(self) -> int:
        return self.R0.shape[0]

    @property
    def poles(self) -> Tuple[complex, ...]:
        return tuple(shift_to_pole(s) for s in self.shifts)

    @property
    def rows(self) -> int:
        return self.K.shape[0]

    def Z(self) -> np.ndarray:
        """V K (n x jp)"""
        return self.V @ self.K

    def identity_residual(self) -> float:
        """||A^H V K - E^H V H||_F (작은 n 검증용)"""
        A = self.problem.A
        left = A.conj().T @ (self.V @ self.K)
        right = self.problem.apply_EH(self.V @ self.H)
        return float(la.norm(left - right, "fro"))


def init(problem: CareProblem) -> Brad:
    """
    j = 0 BRAD

    표준: C^H = V1 R0. 일반화(E): E^H W = C^H 를 풀고 W = V1 R0.

    Raises:
        RankDeficientC: C^H 의 열이 수치적으로 종속
    """
    CH = problem.C.conj().T
    if problem.E is not None:
        E_lu = sparse_lu(problem.E)
        CH = E_lu.solve_adjoint(CH)

    V1, R0 = thin_qr(CH)
    diag = np.abs(np.diag(R0))
    if diag.max() == 0 or diag.min() < settings.RANK_RTOL * diag.max():
        raise RankDeficientC(
            f"C^H has numerical rank < p (min R diag {diag.min():.3e}, max {diag.max():.3e})"
        )

    p = problem.p
    return Brad(
        problem=problem,
        blocks=(V1,),
        K=np.zeros((p, 0), dtype=np.complex128),
        H=np.zeros((p, 0), dtype=np.complex128),
        Ctilde=R0.copy(),
        R0=R0,
        VhB=V1.conj().T @ problem.B,
    )


def _pad_rows(M: np.ndarray, rows: int) -> np.ndarray:
    return np.vstack([M, np.zeros((rows, M.shape[1]), dtype=M.dtype)])


def extend(
    brad: Brad,
    shift: complex,
    factorization: Optional[ShiftedFactorization] = None,
) -> Brad:
    """
    shift 하나로 BRAD 를 한 블록 확장 (마지막 블록 continuation)

    w = (A^H - sigma E^H)^{-1} E^H V t,  t = V 의 마지막 p 열 선택
    w 를 V 에 대해 block Gram-Schmidt 2회 → thin QR 로 V_new, c 를 얻고
    K 에 c, H 에 t + sigma c 를 붙입니다.

    Raises:
        Breakdown: 새 블록의 수치 rank < p. 새 블록이 완전히 소멸하면
            invariant_brad 에 정사각 K, H 를 가진 분해가 담깁니다.
    """
    if brad.invariant:
        raise Breakdown("decomposition is already invariant")

    problem = brad.problem
    pole = shift_to_pole(shift)
    if factorization is None:
        factorization = make_shifted_factorization(problem.A, problem.E, pole)

    p = brad.p
    V = brad.V
    rows = brad.rows

    w = factorization.solve(problem.apply_EH(brad.blocks[-1]))
    scale = la.norm(w, "fro")

    coefficients = np.zeros((rows, p), dtype=np.complex128)
    for _ in range(2):
        projection = V.conj().T @ w
        w = w - V @ projection
        coefficients += projection

    t = np.zeros((rows, p), dtype=np.complex128)
    t[-p:, :] = np.eye(p)

    remainder = la.norm(w, "fro")
    if remainder <= settings.RANK_RTOL * scale:
        # 부분공간이 불변: 정사각 분해로 마무리
        K_sq = np.hstack([brad.K, coefficients])
        H_sq = np.hstack([brad.H, t + pole * coefficients])
        logger.info(f"[Brad] invariant subspace reached at j={brad.j + 1} (dim {rows})")
        raise Breakdown(
            "new block vanished; subspace is invariant",
            invariant_brad=replace(
                brad,
                K=K_sq,
                H=H_sq,
                shifts=brad.shifts + (complex(shift),),
                invariant=True,
            ),
        )

    V_new, R_new = thin_qr(w)
    diag = np.abs(np.diag(R_new))
    if diag.min() < settings.RANK_RTOL * max(scale, diag.max()):
        raise Breakdown(
            f"new block has numerical rank < p at j={brad.j + 1} "
            f"(min R diag {diag.min():.3e})"
        )

    K_new = np.hstack(
        [_pad_rows(brad.K, p), np.vstack([coefficients, R_new])]
    )
    H_new = np.hstack(
        [_pad_rows(brad.H, p), np.vstack([t + pole * coefficients, pole * R_new])]
    )
    logger.debug(
        f"[Brad] extended to j={brad.j + 1} pole={pole:.4g} "
        f"(cond K_sub={condition_number(R_new):.3e})"
    )
    return Brad(
        problem=problem,
        blocks=brad.blocks + (V_new,),
        K=K_new,
        H=H_new,
        Ctilde=_pad_rows(brad.Ctilde, p),
        R0=brad.R0,
        VhB=np.vstack([brad.VhB, V_new.conj().T @ problem.B]),
        shifts=brad.shifts + (complex(shift),),
    )


def orthonormalize_K(brad: Brad) -> Brad:
    """
    K = Q R 로 바꾼 동치 분해 (K ← Q, H ← H R^{-1})

    이후 Z = V K 는 orthonormal 열을 가집니다.
    """
    Q, R = thin_qr(brad.K)
    diag = np.abs(np.diag(R))
    if diag.size and (diag.max() == 0 or diag.min() < settings.RANK_RTOL * diag.max()):
        raise RankDeficient("K lost full column rank")
    # H R^{-1}: R^T X^T = H^T
    H = la.solve_triangular(R, brad.H.T, trans="T").T
    return replace(brad, K=Q, H=H)


def subdiagonal_blocks(brad: Brad):
    """(K_{i+1,i}, H_{i+1,i}) 쌍 목록"""
    p = brad.p
    pairs = []
    count = min(brad.K.shape[1] // p, brad.rows // p - 1)
    for i in range(count):
        rows = slice((i + 1) * p, (i + 2) * p)
        cols = slice(i * p, (i + 1) * p)
        pairs.append((brad.K[rows, cols], brad.H[rows, cols]))
    return pairs
