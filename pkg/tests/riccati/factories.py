# tests/riccati/factories.py
"""
테스트용 난수 인스턴스 생성기

모든 생성기는 seed 가 고정된 numpy Generator 를 받습니다.
"""

import json
from pathlib import Path
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from apps.riccati.services.brad import extend, init
from apps.riccati.services.matrix_market import write_matrix_market
from apps.riccati.services.problem import CareProblem


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def dissipative_matrix(gen: np.random.Generator, n: int, complex_: bool = False) -> np.ndarray:
    """
    A + A^H 가 음정부호인 행렬 (따라서 안정)

    A = -(G G^H / n + I) + (S - S^H) / 2
    """
    G = gen.standard_normal((n, n))
    S = gen.standard_normal((n, n))
    if complex_:
        G = G + 1j * gen.standard_normal((n, n))
        S = S + 1j * gen.standard_normal((n, n))
    return -(G @ G.conj().T / n + np.eye(n)) + 0.5 * (S - S.conj().T)


def spd_tridiagonal(n: int, diagonal: float = 4.0, off: float = -1.0) -> sp.csc_matrix:
    return sp.diags(
        [off * np.ones(n - 1), diagonal * np.ones(n), off * np.ones(n - 1)],
        offsets=[-1, 0, 1],
        format="csc",
    )


def random_problem(
    gen: np.random.Generator,
    n: int = 30,
    m: int = 2,
    p: int = 1,
    complex_: bool = False,
    generalized: bool = False,
) -> CareProblem:
    A = dissipative_matrix(gen, n, complex_=complex_)
    B = gen.standard_normal((n, m))
    C = gen.standard_normal((p, n))
    if complex_:
        B = B + 1j * gen.standard_normal((n, m))
        C = C + 1j * gen.standard_normal((p, n))
    E = spd_tridiagonal(n) if generalized else None
    return CareProblem.from_arrays(A, B, C, E)


def random_shifts(gen: np.random.Generator, count: int, lo: float = 0.1, hi: float = 10.0):
    """로그 균등 분포의 음의 실수 shift"""
    return [complex(-v) for v in np.exp(gen.uniform(np.log(lo), np.log(hi), count))]


def build_brad(problem: CareProblem, shifts):
    brad = init(problem)
    for shift in shifts:
        brad = extend(brad, shift)
    return brad


def scalar_problem() -> CareProblem:
    """a = -1, b = 1, c = 1  →  x = sqrt(2) - 1"""
    return CareProblem.from_arrays(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]))


def write_problem_files(directory: Path, problem: CareProblem, shifts) -> Tuple[Path, Path]:
    """manifest.json (+ A/B/C.mtx) 와 shifts.json 을 쓰고 두 경로를 반환"""
    directory = Path(directory)
    write_matrix_market(directory / "A.mtx", problem.A)
    write_matrix_market(directory / "B.mtx", problem.B)
    write_matrix_market(directory / "C.mtx", problem.C)
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"A": "A.mtx", "B": "B.mtx", "C": "C.mtx"}), encoding="utf-8")
    shift_file = directory / "shifts.json"
    shift_file.write_text(
        json.dumps([[complex(s).real, complex(s).imag] for s in shifts]), encoding="utf-8"
    )
    return manifest, shift_file
