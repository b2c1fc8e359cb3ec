# apps/riccati/services/shifts.py
"""
shift 열 (pole 열)

shift 는 ADI 관례(안정 A 에 대해 Re s < 0)를 따르고,
rational Krylov pole 은 sigma = -s 입니다. 즉 (A^H + s E^H)^{-1} 로 부분공간을 만듭니다.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from django.conf import settings
from scipy import optimize, special

from apps.riccati.exceptions import (
    ConfigError,
    EmptyList,
    EstimateFailure,
    InfiniteShift,
    ParseError,
    ShiftHitsSpectrum,
)
from apps.riccati.services.kernels import make_shifted_factorization, sparse_lu

logger = logging.getLogger(__name__)

DUPLICATE_RTOL = 1e-14

# 스펙트럼 추정 (ARPACK) 예산
ESTIMATE_MAX_ITER = 500
ESTIMATE_RTOL = 1e-6
DENSE_ESTIMATE_MAX_N = 64

FALLBACK_INTERVAL = (1.0, 1e6)

# 상대 폭이 이보다 좁으면 단일점 스펙트럼으로 취급
DEGENERATE_RTOL = 1e-10
ELLIPTIC_BRACKET_STEPS = 60


def shift_to_pole(shift: complex) -> complex:
    return -complex(shift)


def _is_real(value: complex, tol: float = DUPLICATE_RTOL) -> bool:
    return abs(value.imag) <= tol * max(1.0, abs(value))


def _close(a: complex, b: complex, tol: float = DUPLICATE_RTOL) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b), 1e-300)


def _conjugate_closed(values: Tuple[complex, ...]) -> bool:
    unmatched = [v for v in values if not _is_real(v)]
    while unmatched:
        value = unmatched.pop(0)
        partner = next(
            (k for k, w in enumerate(unmatched) if _close(w, value.conjugate())),
            None,
        )
        if partner is None:
            return False
        unmatched.pop(partner)
    return True


@dataclass(frozen=True)
class ShiftSequence:
    """유한 complex shift 의 순서 있는 열"""

    values: Tuple[complex, ...]
    conjugate_closed: bool
    allow_repeats: bool = False

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[complex]:
        return iter(self.values)

    def __getitem__(self, index):
        return self.values[index]

    @property
    def poles(self) -> Tuple[complex, ...]:
        return tuple(shift_to_pole(s) for s in self.values)

    def prefix(self, count: int) -> "ShiftSequence":
        return from_list(self.values[:count], allow_repeats=True)


def from_list(values: Iterable, allow_repeats: bool = False) -> ShiftSequence:
    """
    외부에서 받은 shift 목록 (입력 순서 유지)

    Raises:
        EmptyList: 빈 목록
        InfiniteShift: inf / nan 포함
        ConfigError: allow_repeats=False 인데 중복 shift
    """
    shifts = tuple(complex(v) for v in values)
    if not shifts:
        raise EmptyList()
    for value in shifts:
        if not np.isfinite(value.real) or not np.isfinite(value.imag):
            raise InfiniteShift(f"shift {value} is not finite")

    if not allow_repeats:
        for k, value in enumerate(shifts):
            if any(_close(value, other) for other in shifts[:k]):
                raise ConfigError(f"shift {value} is repeated; allow repeats explicitly")

    return ShiftSequence(
        values=shifts,
        conjugate_closed=_conjugate_closed(shifts),
        allow_repeats=allow_repeats,
    )


def _parse_value(item) -> complex:
    if isinstance(item, (list, tuple)):
        if len(item) != 2:
            raise ValueError(f"expected [re, im], got {item!r}")
        return complex(float(item[0]), float(item[1]))
    if isinstance(item, str):
        return complex(item.replace(" ", "").replace("i", "j"))
    return complex(item)


def read_shift_file(path, allow_repeats: bool = False) -> ShiftSequence:
    """
    shift 파일 읽기

    - JSON 배열: 숫자, [re, im] 쌍, 또는 '1-2j' 형태 문자열
    - 텍스트: 한 줄에 're im' (또는 're'), '#' 주석과 빈 줄은 무시
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        try:
            items = json.loads(text)
            values = [_parse_value(item) for item in items]
        except (ValueError, TypeError) as e:
            raise ParseError(f"invalid JSON shift list: {e}", line=1)
        return from_list(values, allow_repeats=allow_repeats)

    values: List[complex] = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        tokens = stripped.replace(",", " ").split()
        try:
            if len(tokens) == 1:
                values.append(complex(float(tokens[0]), 0.0))
            elif len(tokens) == 2:
                values.append(complex(float(tokens[0]), float(tokens[1])))
            else:
                raise ValueError(stripped)
        except ValueError:
            raise ParseError(f"expected 're im', got '{stripped}'", line=number)
    return from_list(values, allow_repeats=allow_repeats)


# ============================================================
# heuristic
# ============================================================


def _dominant_magnitude(apply, n: int, x0: np.ndarray, label: str) -> float:
    """
    선형 연산자의 지배 고유값 크기 |lambda_max| (ARPACK, seed 고정 시작 벡터)

    n <= DENSE_ESTIMATE_MAX_N 이면 연산자를 dense 로 만들어 직접 계산합니다.
    """
    if n <= DENSE_ESTIMATE_MAX_N:
        dense = np.column_stack([apply(e) for e in np.eye(n, dtype=np.complex128)])
        return float(np.max(np.abs(np.linalg.eigvals(dense))))

    operator = spla.LinearOperator((n, n), matvec=apply, dtype=np.complex128)
    try:
        values = spla.eigs(
            operator,
            k=1,
            which="LM",
            v0=x0,
            tol=ESTIMATE_RTOL,
            maxiter=ESTIMATE_MAX_ITER,
            return_eigenvectors=False,
        )
    except spla.ArpackNoConvergence:
        raise EstimateFailure(f"{label}: no convergence in {ESTIMATE_MAX_ITER} restarts")
    except spla.ArpackError as e:
        raise EstimateFailure(f"{label}: {e}")

    estimate = float(np.abs(values[0]))
    if not np.isfinite(estimate) or estimate == 0.0:
        raise EstimateFailure(f"{label}: degenerate estimate {estimate}")
    logger.debug(f"[Shifts] {label} estimate {estimate:.6e}")
    return estimate


def gershgorin_bound(A) -> float:
    """max_i (|a_ii| + sum_{j != i} |a_ij|) = ||A||_inf"""
    A = sp.csr_matrix(A)
    return float(np.max(np.abs(A).sum(axis=1)))


def spectral_interval(problem, seed: Optional[int] = None) -> Tuple[float, float]:
    """
    E^{-1} A 고유값 크기의 (최소, 최대) 추정

    최대: E^{-1}A 의 지배 고유값
    최소: pole 0 분해 (A^H)^{-1} E^H 의 지배 고유값의 역수 (shift-invert)
    """
    seed = settings.SEED if seed is None else seed
    rng = np.random.default_rng(seed)
    n = problem.n
    x0 = rng.standard_normal(n).astype(np.complex128)

    if problem.E is None:
        forward = lambda x: problem.A @ x
    else:
        E_lu = sparse_lu(problem.E)
        forward = lambda x: E_lu.solve(problem.A @ x)

    try:
        factorization = make_shifted_factorization(problem.A, problem.E, 0.0)
    except ShiftHitsSpectrum:
        raise EstimateFailure("A is singular; inverse iteration impossible")
    inverse = lambda x: factorization.solve(problem.apply_EH(x))

    b = _dominant_magnitude(forward, n, x0, "largest eigenvalue")
    a = 1.0 / _dominant_magnitude(inverse, n, x0, "smallest eigenvalue")
    if problem.E is None:
        b = min(b, gershgorin_bound(problem.A))
    a = min(a, b)
    return a, b


def heuristic_shifts(problem, count: int, seed: Optional[int] = None) -> ShiftSequence:
    """
    [-b, -a] 구간에 타원함수(Zolotarev) 배치로 놓인 count 개의 음의 실수 shift

    count == 1 이면 -sqrt(a b), count == 2 이면 {-a, -b}.
    양 끝 shift 는 추정 구간의 끝점에 고정되고, 순서는 양 끝에서 번갈아 안쪽으로 들어갑니다.

    Raises:
        EstimateFailure: 스펙트럼 추정 실패 (폴백은 provider 가 처리)
    """
    if count < 1:
        raise ConfigError(f"shift count must be >= 1, got {count}")
    a, b = spectral_interval(problem, seed=seed)
    shifts = elliptic_shifts(a, b, count)
    logger.info(f"[Shifts] heuristic: {count} shifts in [-{b:.3e}, -{a:.3e}]")
    # 단일점 스펙트럼이면 (거의) 같은 shift 가 반복됨
    return from_list(shifts, allow_repeats=(b - a <= DEGENERATE_RTOL * b))


def _dn(u: float, km1: float) -> float:
    """dn(u K(k), k), km1 = k'^2 (1 - k^2 을 직접 넘겨 k -> 1 에서 정밀도 유지)"""
    K = special.ellipkm1(km1)
    _, _, dn, _ = special.ellipj(u * K, 1.0 - km1)
    return float(dn)


def _pinned_modulus(kappa: float, count: int) -> float:
    """
    끝점 고정 조건 dn(K / 2J)^2 / k' = kappa 를 만족하는 보조 modulus k'

    log k' 공간에서 brentq 로 풉니다.
    """
    log_kappa = np.log(kappa)
    first = 1.0 / (2 * count)

    def gap(log_kp: float) -> float:
        km1 = np.exp(2.0 * log_kp)
        return 2.0 * np.log(_dn(first, km1)) - log_kp - log_kappa

    hi = -log_kappa
    lo = -log_kappa * count / (count - 1)
    for _ in range(ELLIPTIC_BRACKET_STEPS):
        if gap(lo) > 0.0:
            break
        lo *= 2.0
    else:
        raise EstimateFailure(f"elliptic shift placement: no bracket for kappa={kappa:.3e}")

    return float(np.exp(optimize.brentq(gap, lo, hi, xtol=1e-14)))


def _alternate_ends(values: List[float]) -> List[float]:
    """오름차순 값을 작은 쪽, 큰 쪽, 다음 작은 쪽 ... 순서로"""
    ordered = []
    lo, hi = 0, len(values) - 1
    while lo <= hi:
        ordered.append(values[lo])
        if hi != lo:
            ordered.append(values[hi])
        lo += 1
        hi -= 1
    return ordered


def elliptic_shifts(a: float, b: float, count: int) -> List[complex]:
    """
    0 < a <= b 구간의 Zolotarev 형 ADI 점 (-p_i)

    보조 구간 [a', b'] (a' b' = a b) 의 Wachspress 점
    p_i = b' dn((2i - 1) K / 2J, k), k' = a' / b' 을 쓰되,
    가장 큰 점과 가장 작은 점이 정확히 b, a 가 되도록 k' 를 고릅니다.
    """
    if count == 1:
        return [complex(-np.sqrt(a * b))]
    if b - a <= DEGENERATE_RTOL * b:
        return [complex(-np.sqrt(a * b))] * count

    kp = _pinned_modulus(b / a, count)
    km1 = kp * kp
    b_aux = np.sqrt(a * b / kp)
    a_aux = b_aux * kp

    points = []
    for i in range(1, count + 1):
        u = (2 * i - 1) / (2 * count)
        if u <= 0.5:
            points.append(b_aux * _dn(u, km1))
        else:
            # dn((1 - u) K) dn(u K) = k'
            points.append(a_aux / _dn(1.0 - u, km1))
    points[0], points[-1] = b, a
    points = sorted(float(np.clip(p, a, b)) for p in points)
    return [complex(-p) for p in _alternate_ends(points)]


def log_spaced_shifts(a: float, b: float, count: int) -> List[complex]:
    if count == 1:
        return [complex(-np.sqrt(a * b))]
    return [complex(-v) for v in np.geomspace(a, b, count)]


def fallback_shifts(count: int) -> ShiftSequence:
    lo, hi = FALLBACK_INTERVAL
    return from_list(log_spaced_shifts(lo, hi, count))
