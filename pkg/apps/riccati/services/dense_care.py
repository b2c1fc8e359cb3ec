# apps/riccati/services/dense_care.py
"""
작은 dense CARE / Lyapunov 솔버

    A^H Y + Y A + C^H C - Y B B^H Y = 0

투영된 축소 문제의 내부 솔버(Hamiltonian ordered Schur)와
독립 검증용 Newton-Kleinman 경로를 함께 제공합니다.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np
import scipy.linalg as la
from django.conf import settings

from apps.riccati.exceptions import (
    CapExceeded,
    IllConditionedU1,
    NoStabilizingSolution,
    SpectrumCollision,
)
from apps.riccati.services.kernels import as_complex, condition_number, ordered_schur

logger = logging.getLogger(__name__)

IMAGINARY_AXIS_RTOL = 1e-10
CARE_RESIDUAL_RTOL = 1e-8
LYAPUNOV_COLLISION_RTOL = 1e-12


class DenseReport(str, enum.Enum):
    ACCURATE = "Accurate"
    ILL_CONDITIONED = "IllConditioned"


@dataclass(frozen=True, eq=False)
class DenseCareSolution:
    Y: np.ndarray
    closed_loop_spectrum: np.ndarray
    report: DenseReport
    residual: float


def care_residual(A, B, C, Y) -> np.ndarray:
    """A^H Y + Y A + C^H C - Y B B^H Y"""
    A, B, C, Y = (as_complex(M) for M in (A, B, C, Y))
    AhY = A.conj().T @ Y
    YB = Y @ B
    return AhY + AhY.conj().T + C.conj().T @ C - YB @ YB.conj().T


def _symmetrize(Y: np.ndarray) -> np.ndarray:
    return 0.5 * (Y + Y.conj().T)


def solve_care_dense(A, B, C, cap: Optional[int] = None) -> DenseCareSolution:
    """
    Hamiltonian [[A, -BB^H], [-C^HC, -A^H]] 의 안정 불변부분공간으로 Y = U2 U1^{-1}

    Raises:
        CapExceeded: 차수가 cap 초과
        NoStabilizingSolution: 허수축 근처 고유값 (선택 개수 != d)
        IllConditionedU1: cond(U1) > U1_COND_MAX
    """
    A, B, C = as_complex(A), as_complex(B), as_complex(C)
    d = A.shape[0]
    cap = settings.DENSE_CARE_CAP if cap is None else cap
    if d > cap:
        raise CapExceeded(f"reduced order {d} exceeds the dense CARE cap {cap}")

    G = B @ B.conj().T
    hamiltonian = np.block([[A, -G], [-C.conj().T @ C, -A.conj().T]])
    axis_tol = IMAGINARY_AXIS_RTOL * max(1.0, la.norm(hamiltonian, "fro"))

    Q, T, k = ordered_schur(hamiltonian, lambda z: z.real < 0)
    eigenvalues = np.diag(T)
    if k != d or np.any(np.abs(eigenvalues.real) <= axis_tol):
        raise NoStabilizingSolution(
            f"{k} stable Hamiltonian eigenvalues for order {d}; "
            f"min |Re| = {np.min(np.abs(eigenvalues.real)):.3e}"
        )

    U1, U2 = Q[:d, :d], Q[d:, :d]
    cond_U1 = condition_number(U1)
    if cond_U1 > settings.U1_COND_MAX:
        raise IllConditionedU1(f"cond(U1) = {cond_U1:.3e}")

    # Y U1 = U2  →  U1^T Y^T = U2^T
    Y = _symmetrize(la.solve(U1.T, U2.T).T)
    spectrum = la.eigvals(A - G @ Y)
    residual = la.norm(care_residual(A, B, C, Y), "fro")
    bound = CARE_RESIDUAL_RTOL * max(1.0, la.norm(Y, "fro") ** 2 * la.norm(G, "fro"))

    report = DenseReport.ACCURATE
    if np.any(spectrum.real >= 0) or residual > bound:
        report = DenseReport.ILL_CONDITIONED
        logger.warning(
            f"[DenseCare] ill-conditioned solution: residual={residual:.3e}, "
            f"max Re(closed loop)={np.max(spectrum.real):.3e}"
        )
    logger.debug(f"[DenseCare] d={d} cond(U1)={cond_U1:.3e} residual={residual:.3e}")
    return DenseCareSolution(
        Y=Y, closed_loop_spectrum=spectrum, report=report, residual=float(residual)
    )


def solve_lyapunov_dense(F, W) -> np.ndarray:
    """
    F^H P + P F + W = 0 (Bartels-Stewart)

    Raises:
        SpectrumCollision: lambda_i + conj(lambda_k) = 0 인 고유값 쌍 존재
    """
    F, W = as_complex(F), as_complex(W)
    eigenvalues = la.eigvals(F)
    gap = np.min(np.abs(eigenvalues[:, None] + eigenvalues.conj()[None, :]))
    if gap <= LYAPUNOV_COLLISION_RTOL * max(1.0, la.norm(F, "fro")):
        raise SpectrumCollision(f"Lyapunov operator gap {gap:.3e}")

    P = la.solve_continuous_lyapunov(F.conj().T, -W)
    return _symmetrize(P)


def newton_kleinman_oracle(A, B, C, iters: int = 50, tol: float = 1e-12) -> np.ndarray:
    """
    Newton-Kleinman 반복 (A 안정 → Y0 = 0 에서 시작)

    (A - BB^H Y_k)^H Y_{k+1} + Y_{k+1} (A - BB^H Y_k) + C^H C + Y_k BB^H Y_k = 0
    """
    A, B, C = as_complex(A), as_complex(B), as_complex(C)
    G = B @ B.conj().T
    CtC = C.conj().T @ C
    Y = np.zeros_like(A)
    scale = max(la.norm(CtC, "fro"), np.finfo(float).tiny)
    for step in range(1, iters + 1):
        F = A - G @ Y
        Y = solve_lyapunov_dense(F, CtC + Y @ G @ Y)
        residual = la.norm(care_residual(A, B, C, Y), "fro")
        if residual <= tol * max(scale, la.norm(Y, "fro")):
            logger.debug(f"[NewtonKleinman] converged in {step} steps")
            break
    return Y


# ============================================================
# 솔버 인터페이스 (투영 솔버에 주입)
# ============================================================


class IDenseCareSolver(Protocol):
    def solve(self, A, B, C) -> DenseCareSolution: ...


class SchurCareSolver:
    """Hamiltonian ordered Schur (기본)"""

    def __init__(self, cap: Optional[int] = None):
        self.cap = cap

    def solve(self, A, B, C) -> DenseCareSolution:
        return solve_care_dense(A, B, C, cap=self.cap)


class NewtonKleinmanCareSolver:
    """A 가 안정일 때만 유효한 대안 경로"""

    def __init__(self, iters: int = 50):
        self.iters = iters

    def solve(self, A, B, C) -> DenseCareSolution:
        A, B = as_complex(A), as_complex(B)
        Y = newton_kleinman_oracle(A, B, C, iters=self.iters)
        spectrum = la.eigvals(A - B @ B.conj().T @ Y)
        residual = float(la.norm(care_residual(A, B, C, Y), "fro"))
        report = DenseReport.ACCURATE if np.all(spectrum.real < 0) else DenseReport.ILL_CONDITIONED
        return DenseCareSolution(
            Y=Y, closed_loop_spectrum=spectrum, report=report, residual=residual
        )


def get_dense_care_solver() -> IDenseCareSolver:
    return SchurCareSolver()
