# apps/riccati/services/problem.py
"""
CARE 문제 정의

    A^H X E + E^H X A + C^H C - E^H X B B^H X E = 0   (E 없으면 identity)

검증, 파일 로딩, convection-diffusion 벤치마크 생성을 담당합니다.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
import sympy
from sympy.parsing.sympy_parser import parse_expr
from django.conf import settings

from apps.riccati.exceptions import (
    CapExceeded,
    DimensionMismatch,
    EmptyIndicator,
    SingularE,
)
from apps.riccati.schemas import FdmSpec, ProblemManifest
from apps.riccati.services.kernels import as_complex, sparse_lu
from apps.riccati.services.matrix_market import load_matrix_market

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CareProblem:
    """
    (A, E, B, C) 4개 조

    A, E 는 csc sparse, B (n x m) / C (p x n) 는 dense. 모두 complex128.
    """

    A: sp.csc_matrix
    B: np.ndarray
    C: np.ndarray
    E: Optional[sp.csc_matrix] = None

    @classmethod
    def from_arrays(cls, A, B, C, E=None) -> "CareProblem":
        """dense/sparse 입력을 표준 형태로 변환 (1차원 B 는 열, 1차원 C 는 행)"""
        A = sp.csc_matrix(A, dtype=np.complex128)
        E = None if E is None else sp.csc_matrix(E, dtype=np.complex128)
        B = B.toarray() if sp.issparse(B) else B
        C = C.toarray() if sp.issparse(C) else C
        B = as_complex(B)
        C = as_complex(C)
        if B.ndim == 1:
            B = B[:, None]
        if C.ndim == 1:
            C = C[None, :]
        return cls(A=A, B=B, C=C, E=E)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_generalized(self) -> bool:
        return self.E is not None

    def apply_EH(self, X: np.ndarray) -> np.ndarray:
        """E^H X (E 없으면 X 그대로)"""
        if self.E is None:
            return X
        return self.E.conj().T @ X

    def dense(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(A, E, B, C) dense. n 이 dense cap 을 넘으면 CapExceeded"""
        if self.n > settings.DENSE_CAP:
            raise CapExceeded(f"n={self.n} exceeds the dense cap {settings.DENSE_CAP}")
        E = np.eye(self.n, dtype=np.complex128) if self.E is None else self.E.toarray()
        return self.A.toarray(), E, self.B, self.C


def validate(problem: CareProblem) -> CareProblem:
    """
    차원 / E 정칙성 검사

    Raises:
        DimensionMismatch: A, E 정사각/동일 차수, B 행 수, C 열 수 불일치
        SingularE: E 가 singular
    """
    rows, cols = problem.A.shape
    if rows != cols:
        raise DimensionMismatch(f"A must be square, got {rows}x{cols}")
    n = rows
    if problem.B.ndim != 2 or problem.B.shape[0] != n:
        raise DimensionMismatch(f"B must have {n} rows, got shape {problem.B.shape}")
    if problem.C.ndim != 2 or problem.C.shape[1] != n:
        raise DimensionMismatch(f"C must have {n} columns, got shape {problem.C.shape}")
    if problem.m < 1 or problem.p < 1:
        raise DimensionMismatch("B and C need at least one column / row")
    if problem.E is not None:
        if problem.E.shape != (n, n):
            raise DimensionMismatch(f"E must be {n}x{n}, got {problem.E.shape}")
        if sparse_lu(problem.E) is None:
            raise SingularE()

    if problem.p > n / 10 or problem.m > n / 10:
        logger.warning(
            f"[Problem] p={problem.p}, m={problem.m} exceed n/10 (n={n}); "
            f"the projection targets p, m << n"
        )
    logger.debug(f"[Problem] validated n={n}, m={problem.m}, p={problem.p}")
    return problem


# ============================================================
# convection-diffusion 생성기
# ============================================================

_x, _y = sympy.symbols("x y", real=True)


def coefficient_function(text: str):
    """'10*x' 같은 계수 문자열 → numpy 함수 f(x, y)"""
    expr = parse_expr(text, local_dict={"x": _x, "y": _y})
    f = sympy.lambdify((_x, _y), expr, "numpy")

    def evaluate(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape).copy()

    return evaluate


def grid_coordinates(grid: int) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    내부 격자점 좌표 (x 가 빠르게 변하는 lexicographic 순서)

    Returns:
        (x, y, h): 길이 grid^2 인 좌표 벡터와 격자 간격 h = 1/(grid+1)
    """
    h = 1.0 / (grid + 1)
    nodes = h * np.arange(1, grid + 1)
    X, Y = np.meshgrid(nodes, nodes, indexing="xy")
    return X.ravel(), Y.ravel(), h


def _indicator(coords: np.ndarray, bounds: Tuple[float, float], name: str) -> np.ndarray:
    lo, hi = bounds
    mask = (coords > lo) & (coords <= hi)
    if not mask.any():
        raise EmptyIndicator(f"{name} range ({lo}, {hi}] captures no grid node")
    return mask.astype(np.complex128)


def fdm_2d_problem(
    grid: int,
    convection_x: str = "10*x",
    convection_y: str = "100*y",
    b_range: Tuple[float, float] = (0.1, 0.3),
    c_range: Tuple[float, float] = (0.7, 0.9),
    reaction: str = "0",
) -> CareProblem:
    """
    -Δu + f_x u_x + f_y u_y + g u 의 5-point 중심차분 (Dirichlet, n = grid^2)

    A 는 이산 연산자의 부호를 바꾼 것 (diffusion 부분이 음정부호, 즉 안정).
    B, C^H 는 x 좌표가 구간 (lo, hi] 에 드는 격자점의 0/1 indicator.
    """
    if grid < 2:
        raise DimensionMismatch(f"grid must be >= 2, got {grid}")

    x, y, h = grid_coordinates(grid)
    n = grid * grid
    fx = coefficient_function(convection_x)(x, y)
    fy = coefficient_function(convection_y)(x, y)
    g = coefficient_function(reaction)(x, y)

    index = np.arange(n)
    ix = index % grid
    iy = index // grid
    inv_h2 = 1.0 / h**2

    rows = [index]
    cols = [index]
    vals = [-4.0 * inv_h2 - g]

    # (이웃 mask, 이웃 offset, 계수)
    neighbours = (
        (ix < grid - 1, 1, inv_h2 - fx / (2 * h)),
        (ix > 0, -1, inv_h2 + fx / (2 * h)),
        (iy < grid - 1, grid, inv_h2 - fy / (2 * h)),
        (iy > 0, -grid, inv_h2 + fy / (2 * h)),
    )
    for mask, offset, coefficient in neighbours:
        rows.append(index[mask])
        cols.append(index[mask] + offset)
        vals.append(coefficient[mask])

    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsc()

    B = _indicator(x, b_range, "b")[:, None]
    C = _indicator(x, c_range, "c")[None, :]
    problem = CareProblem.from_arrays(A, B, C)
    logger.info(
        f"[Problem] fdm grid={grid} n={n} f_x='{convection_x}' f_y='{convection_y}' "
        f"b={b_range} c={c_range}"
    )
    return validate(problem)


def fdm_from_spec(spec: FdmSpec) -> CareProblem:
    return fdm_2d_problem(
        grid=spec.grid,
        convection_x=spec.convection_x,
        convection_y=spec.convection_y,
        b_range=tuple(spec.b_range),
        c_range=tuple(spec.c_range),
        reaction=spec.reaction,
    )


def _dense_block(path) -> np.ndarray:
    M = load_matrix_market(path)
    return M.toarray() if sp.issparse(M) else M


def load_problem(manifest_path) -> CareProblem:
    """manifest(JSON) 로부터 문제 로딩 (파일 경로 또는 fdm 스펙)"""
    manifest = ProblemManifest.from_file(Path(manifest_path))
    if manifest.fdm is not None:
        return fdm_from_spec(manifest.fdm)

    A = load_matrix_market(manifest.A)
    E = None if manifest.E is None else load_matrix_market(manifest.E)
    problem = CareProblem.from_arrays(
        A, _dense_block(manifest.B), _dense_block(manifest.C), E
    )
    logger.info(f"[Problem] loaded {manifest_path}: n={problem.n}")
    return validate(problem)
