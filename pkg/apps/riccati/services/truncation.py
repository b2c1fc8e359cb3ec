# apps/riccati/services/truncation.py
"""
근사해 truncation

K Y K^H 를 고유분해해 tau * rho 이하(비양수 포함)의 고유쌍을 버립니다.
BRAD 자체는 건드리지 않고, 보고되는 해와 그 잔차에만 적용됩니다.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la

from apps.riccati.exceptions import AllTruncated
from apps.riccati.schemas import TruncationPolicy
from apps.riccati.services.brad import Brad
from apps.riccati.services.kernels import hermitian_eig, spectral_radius
from apps.riccati.services.residual import ResidualWorkspace, build_workspace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TruncatedSolution:
    """
    X_hat = (V Qhat) diag(eigenvalues) (V Qhat)^H

    Attributes:
        Qhat: (j+1)p x r orthonormal
        eigenvalues: 유지된 고유값 (내림차순, 모두 양수)
        Hhat: H T1 (T1 = K^+ Qhat)
        Lhat: Qhat
        discarded: 버린 고유값
    """

    brad: Brad
    Qhat: np.ndarray
    eigenvalues: np.ndarray
    Hhat: np.ndarray
    Lhat: np.ndarray
    discarded: np.ndarray

    @property
    def r(self) -> int:
        return self.Qhat.shape[1]

    @property
    def Yhat(self) -> np.ndarray:
        return np.diag(self.eigenvalues).astype(np.complex128)

    @property
    def basis(self) -> np.ndarray:
        return self.Qhat

    @property
    def Y(self) -> np.ndarray:
        return self.Yhat


def truncate(brad, Y, policy: Optional[TruncationPolicy] = None) -> TruncatedSolution:
    """
    Raises:
        AllTruncated: 유지되는 고유값이 없음 (r = 0)
    """
    policy = policy or TruncationPolicy()
    K = brad.K
    M = K @ Y @ K.conj().T
    M = 0.5 * (M + M.conj().T)
    eigenvalues, Q = hermitian_eig(M)
    rho = spectral_radius(M)

    keep = eigenvalues > policy.tau * rho
    r = int(np.count_nonzero(keep))
    if r == 0:
        raise AllTruncated(f"no eigenvalue of K Y K^H exceeds {policy.tau:.1e} * rho")

    Qhat = Q[:, :r]
    T1 = la.lstsq(K, Qhat)[0]
    Hhat = brad.H @ T1
    largest_discarded = float(eigenvalues[r]) if r < eigenvalues.size else 0.0
    logger.debug(
        f"[Truncation] kept r={r} of {K.shape[1]} (rho={rho:.3e}, "
        f"largest discarded={largest_discarded:.3e})"
    )
    return TruncatedSolution(
        brad=brad,
        Qhat=Qhat,
        eigenvalues=eigenvalues[:r].copy(),
        Hhat=Hhat,
        Lhat=Qhat,
        discarded=eigenvalues[r:].copy(),
    )


def truncated_workspace(trunc: TruncatedSolution, E=None) -> ResidualWorkspace:
    brad = trunc.brad
    EhV = None if E is None else E.conj().T @ brad.V
    return build_workspace(
        trunc.Qhat, trunc.Hhat, trunc.Lhat, brad.Ctilde, trunc.Yhat, EhV=EhV
    )


def truncated_residual_norm(trunc: TruncatedSolution, E=None, kind: str = "fro") -> float:
    """
    truncated 해의 잔차 norm (K ← Qhat, H ← Hhat, L ← Lhat, Y ← Yhat)

    보완 공간 크기 d_c = (j+1)p - r, 잔차 rank 는 최대 2 d_c.
    """
    return truncated_workspace(trunc, E=E).norm(kind)
