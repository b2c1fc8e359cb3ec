# apps/riccati/services/projector.py
"""
투영 솔버

BRAD 를 shift 하나씩 확장하면서 매 step
test space L 선택 → 축소 CARE 구성 → dense 해 → 압축 잔차 (→ truncation)
를 수행합니다. 수렴 판정은 항상 압축 잔차로 합니다.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la
from django.conf import settings

from apps.riccati.exceptions import (
    AllTruncated,
    Breakdown,
    CapExceeded,
    ConfigError,
    DimensionMismatch,
    NoStabilizingSolution,
    NumericalFailure,
    RiccatiError,
    ShiftHitsSpectrum,
    ShiftsExhausted,
    SingularLtK,
)
from apps.riccati.schemas import HistoryRecord, ProjectorChoice, SolveOptions
from apps.riccati.services.brad import Brad, extend, init
from apps.riccati.services.dense_care import IDenseCareSolver, get_dense_care_solver
from apps.riccati.services.kernels import (
    as_complex,
    make_shifted_factorization,
    matrix_norm,
    numerical_rank,
    spectral_norm,
)
from apps.riccati.services.problem import CareProblem
from apps.riccati.services.residual import residual_workspace
from apps.riccati.services.shifts import ShiftSequence, shift_to_pole
from apps.riccati.services.truncation import TruncatedSolution, truncate, truncated_workspace

logger = logging.getLogger(__name__)


# ============================================================
# 타입
# ============================================================


@dataclass(frozen=True, eq=False)
class ProjectedCare:
    """
    축소 CARE (Aj, Bj, Cj)

    Aj = H^H L (K^H L)^{-1}, Bj = K^H V^H B, Cj = Ctilde^H L (K^H L)^{-1}.
    Sj = Bj Bj^H 는 따로 저장하지 않습니다.
    """

    Aj: np.ndarray
    Bj: np.ndarray
    Cj: np.ndarray
    LtK_factor: Tuple[np.ndarray, np.ndarray]
    cond_LtK: float
    L: np.ndarray


@dataclass(frozen=True, eq=False)
class LowRankSolution:
    """
    X = Z Y Z^H, Z = V basis

    basis 는 K (또는 truncation 후 Qhat).
    """

    brad: Brad
    basis: np.ndarray
    Y: np.ndarray
    truncated: bool = False

    @classmethod
    def from_truncated(cls, trunc: TruncatedSolution) -> "LowRankSolution":
        return cls(brad=trunc.brad, basis=trunc.Qhat, Y=trunc.Yhat, truncated=True)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def Z(self) -> np.ndarray:
        return self.brad.V @ self.basis

    def dense(self) -> np.ndarray:
        """X (n x n). n 이 dense cap 초과면 CapExceeded"""
        n = self.brad.problem.n
        if n > settings.DENSE_CAP:
            raise CapExceeded(f"n={n} exceeds the dense cap {settings.DENSE_CAP}")
        Z = self.Z()
        return Z @ self.Y @ Z.conj().T


class ConvergenceHistory:
    """step 기록 누적 (append 는 lock 아래에서)"""

    def __init__(self, label: str = ""):
        self.label = label
        self.converged = False
        self._records: List[HistoryRecord] = []
        self._lock = threading.Lock()

    def append(self, record: HistoryRecord) -> None:
        with self._lock:
            if self._records and record.j < self._records[-1].j:
                raise ValueError(f"history j must not decrease ({record.j} after {self._records[-1].j})")
            self._records.append(record)

    @property
    def records(self) -> List[HistoryRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self.records)

    @property
    def last(self) -> Optional[HistoryRecord]:
        records = self.records
        return records[-1] if records else None


class RunResult(NamedTuple):
    solution: Optional[LowRankSolution]
    history: ConvergenceHistory


@dataclass(frozen=True, eq=False)
class ChoiceOutcome:
    choice: ProjectorChoice
    solution: Optional[LowRankSolution]
    history: ConvergenceHistory
    converged: bool
    failed: bool
    errors: Tuple[str, ...] = ()


# ============================================================
# step 연산
# ============================================================


def ltk_condition(L: np.ndarray, K: np.ndarray) -> float:
    """||L||_2 ||K||_2 / sigma_min(L^H K)"""
    s = la.svdvals(L.conj().T @ K)
    if s.size == 0 or s.min() == 0:
        return np.inf
    return float(spectral_norm(L) * spectral_norm(K) / s.min())


def build_L(brad: Brad, choice: ProjectorChoice) -> np.ndarray:
    """
    test space 행렬 L ((j+1)p x jp)

    Raises:
        SingularLtK: cond(L^H K) > LTK_COND_MAX
    """
    if brad.K.shape[1] == 0:
        raise DimensionMismatch("BRAD needs at least one block before projecting")

    if choice.variant == "K":
        L = brad.K
    elif choice.variant == "H":
        L = brad.H
    else:
        L = choice.alpha * brad.H - choice.beta * brad.K

    cond = ltk_condition(L, brad.K)
    if cond > settings.LTK_COND_MAX:
        raise SingularLtK(f"cond(L^H K) = {cond:.3e} for L={choice.label}")
    return L


def project(brad: Brad, L: np.ndarray) -> ProjectedCare:
    """
    (L^H K) 를 한 번 LU 분해해서 Aj, Cj 에 재사용

    Raises:
        SingularLtK
    """
    K, H = brad.K, brad.H
    cond = ltk_condition(L, K)
    if cond > settings.LTK_COND_MAX:
        raise SingularLtK(f"cond(L^H K) = {cond:.3e}")

    Lh = L.conj().T
    factor = la.lu_factor(Lh @ K)
    # Aj^H = (L^H K)^{-1} L^H H,  Cj^H = (L^H K)^{-1} L^H Ctilde
    Aj = la.lu_solve(factor, Lh @ H).conj().T
    Cj = la.lu_solve(factor, Lh @ brad.Ctilde).conj().T
    Bj = K.conj().T @ brad.VhB

    jp, p, m = K.shape[1], Cj.shape[0], Bj.shape[1]
    rank_C = numerical_rank(la.svdvals(Cj))
    rank_B = numerical_rank(la.svdvals(Bj))
    if rank_C != p or rank_B != min(jp, m):
        logger.warning(
            f"[Projector] reduced matrices lost rank: rank(Cj)={rank_C}/{p}, "
            f"rank(Bj)={rank_B}/{min(jp, m)}"
        )
    logger.debug(f"[Projector] projected to order {jp}, cond(L^H K)={cond:.3e}")
    return ProjectedCare(Aj=Aj, Bj=Bj, Cj=Cj, LtK_factor=factor, cond_LtK=cond, L=L)


def project_explicit(problem: CareProblem, Q) -> ProjectedCare:
    """
    orthonormal Q 로의 직접 Galerkin 투영 (Q^H A Q, Q^H B, C Q)

    E 없는 작은 문제의 교차 검증용.
    """
    if problem.E is not None:
        raise ConfigError("explicit projection is defined for E = I only")
    Q = as_complex(Q)
    Aj = Q.conj().T @ (problem.A @ Q)
    eye = np.eye(Q.shape[1], dtype=np.complex128)
    return ProjectedCare(
        Aj=Aj,
        Bj=Q.conj().T @ problem.B,
        Cj=problem.C @ Q,
        LtK_factor=la.lu_factor(eye),
        cond_LtK=1.0,
        L=Q,
    )


def solve_step(projected: ProjectedCare, solver: Optional[IDenseCareSolver] = None) -> np.ndarray:
    """
    축소 CARE 의 안정화 해 Yj

    Raises:
        NoStabilizingSolution
    """
    solver = solver or get_dense_care_solver()
    return solver.solve(projected.Aj, projected.Bj, projected.Cj).Y


def residual_denominator(problem: CareProblem, options: SolveOptions) -> float:
    """상대 잔차의 분모"""
    if options.denominator == "abs":
        return 1.0
    # ||C C^H|| == ||C^H C|| (fro, 2 모두)
    CCh = problem.C @ problem.C.conj().T
    return matrix_norm(CCh, options.norm)


def _pad(Y: Optional[np.ndarray], size: int) -> np.ndarray:
    padded = np.zeros((size, size), dtype=np.complex128)
    if Y is not None:
        k = Y.shape[0]
        padded[:k, :k] = Y
    return padded


# ============================================================
# outer iteration
# ============================================================


@dataclass(eq=False)
class _ChoiceState:
    choice: ProjectorChoice
    history: ConvergenceHistory
    prev_Y: Optional[np.ndarray] = None
    prev_rel: Optional[float] = None
    last: Optional[LowRankSolution] = None
    best: Optional[LowRankSolution] = None
    best_rel: float = np.inf
    converged: bool = False
    errors: List[str] = field(default_factory=list)


class ProjectionSolver:
    """
    투영 기반 CARE 솔버

    dense 축소 솔버는 생성자 주입 (기본값: get_dense_care_solver()).
    """

    def __init__(self, solver: Optional[IDenseCareSolver] = None, threads: Optional[int] = None):
        self.solver = solver or get_dense_care_solver()
        self.threads = max(1, settings.THREADS if threads is None else threads)

    def run(
        self,
        problem: CareProblem,
        shifts: ShiftSequence,
        choice: Optional[ProjectorChoice] = None,
        options: Optional[SolveOptions] = None,
    ) -> RunResult:
        """
        Raises:
            ShiftsExhausted: 허용오차 미달 (result 에 best-so-far)
        """
        choice = choice or ProjectorChoice()
        outcome = self.compare(problem, shifts, [choice], options)[choice.label]
        result = RunResult(solution=outcome.solution, history=outcome.history)
        if not outcome.converged:
            last = outcome.history.last
            stopped = f", stopped by {outcome.errors[-1]}" if outcome.errors else ""
            raise ShiftsExhausted(
                f"tolerance not reached after {last.j if last else 0} blocks "
                f"(L={choice.label}{stopped})",
                result=result,
            )
        return result

    def compare(
        self,
        problem: CareProblem,
        shifts: ShiftSequence,
        choices: Sequence[ProjectorChoice],
        options: Optional[SolveOptions] = None,
    ) -> Dict[str, ChoiceOutcome]:
        """하나의 공유 BRAD 위에서 여러 L 선택을 동시에 평가"""
        options = options or SolveOptions()
        states = [_ChoiceState(choice=c, history=ConvergenceHistory(c.label)) for c in choices]
        self._iterate(problem, shifts, states, options)

        outcomes = {}
        for state in states:
            state.history.converged = state.converged
            solution = state.last if state.converged else state.best
            outcomes[state.choice.label] = ChoiceOutcome(
                choice=state.choice,
                solution=solution,
                history=state.history,
                converged=state.converged,
                failed=not state.converged and bool(state.errors),
                errors=tuple(state.errors),
            )
        return outcomes

    def _iterate(
        self,
        problem: CareProblem,
        shifts: ShiftSequence,
        states: List[_ChoiceState],
        options: SolveOptions,
    ) -> None:
        brad = init(problem)
        denominator = residual_denominator(problem, options)
        max_blocks = options.max_blocks or len(shifts)
        values = list(shifts)

        def factorize(shift):
            return make_shifted_factorization(problem.A, problem.E, shift_to_pole(shift))

        pool = ThreadPoolExecutor(max_workers=self.threads) if self.threads > 1 else None
        pending = pool.submit(factorize, values[0]) if pool and values else None
        try:
            for index, shift in enumerate(values):
                if brad.j >= max_blocks or all(s.converged for s in states):
                    break
                started = time.perf_counter()
                try:
                    factorization = pending.result() if pool else factorize(shift)
                except ShiftHitsSpectrum as e:
                    logger.warning(f"[Projector] skipping shift {shift}: {e.detail}")
                    factorization = None
                if pool and index + 1 < len(values):
                    pending = pool.submit(factorize, values[index + 1])
                if factorization is None:
                    continue

                final = False
                try:
                    brad = extend(brad, shift, factorization)
                except Breakdown as e:
                    if e.invariant_brad is None:
                        logger.error(f"[Projector] {e.detail}; stopping")
                        self._record_breakdown(states, brad, shift, e, started)
                        break
                    brad = e.invariant_brad
                    final = True

                active = [s for s in states if not s.converged]
                step = lambda state: self._evaluate(
                    state, brad, shift, options, denominator, started
                )
                if pool and len(active) > 1:
                    list(pool.map(step, active))
                else:
                    for state in active:
                        step(state)
                if final:
                    break
        finally:
            if pool:
                pool.shutdown(wait=True, cancel_futures=True)

    def _evaluate(
        self,
        state: _ChoiceState,
        brad: Brad,
        shift: complex,
        options: SolveOptions,
        denominator: float,
        started: float,
    ) -> None:
        problem = brad.problem
        kind = options.norm
        record = {
            "j": brad.j,
            "dim": brad.K.shape[1],
            "shift_re": complex(shift).real,
            "shift_im": complex(shift).imag,
            "stored_columns": brad.K.shape[1],
        }

        try:
            L = build_L(brad, state.choice)
            projected = project(brad, L)
            record["cond_LtK"] = projected.cond_LtK

            try:
                Y = solve_step(projected, self.solver)
                workspace = residual_workspace(brad, L, Y, E=problem.E)
                rel = workspace.norm(kind) / denominator
                record["residual_rank"] = workspace.rank()
            except NoStabilizingSolution as e:
                logger.warning(
                    f"[Projector] j={brad.j} L={state.choice.label}: {e.detail}; "
                    f"reusing the previous iterate"
                )
                Y = _pad(state.prev_Y, brad.K.shape[1])
                rel = state.prev_rel
                if rel is None:
                    rel = matrix_norm(problem.C @ problem.C.conj().T, kind) / denominator
                record["flag"] = "no_stabilizing_solution"

            record["rel_residual"] = rel
            candidate = LowRankSolution(brad=brad, basis=brad.K, Y=Y)
            candidate_rel = rel

            if options.truncate and "flag" not in record:
                try:
                    trunc = truncate(brad, Y, options.policy)
                    trunc_workspace = truncated_workspace(trunc, E=problem.E)
                    trunc_rel = trunc_workspace.norm(kind) / denominator
                    record["r"] = trunc.r
                    record["trunc_rel_residual"] = trunc_rel
                    record["trunc_residual_rank"] = trunc_workspace.rank()
                    if trunc_rel <= rel:
                        candidate = LowRankSolution.from_truncated(trunc)
                        candidate_rel = trunc_rel
                except AllTruncated as e:
                    logger.warning(f"[Projector] j={brad.j}: {e.detail}; keeping the untruncated iterate")
                    record["flag"] = "all_truncated"

            record["stored_columns"] = candidate.rank
            state.prev_Y = Y
            state.prev_rel = rel
            state.last = candidate
            if candidate_rel < state.best_rel:
                state.best, state.best_rel = candidate, candidate_rel
            state.converged = candidate_rel <= options.tol

            logger.info(
                f"[Projector] L={state.choice.label} j={brad.j} dim={brad.K.shape[1]} "
                f"rel_residual={rel:.3e}"
                + (f" r={record['r']} trunc={record['trunc_rel_residual']:.3e}" if "r" in record else "")
            )
        except RiccatiError as e:
            self._fail(state, record, e)
        except (np.linalg.LinAlgError, ValueError, ArithmeticError) as e:
            # 라이브러리 예외는 이 선택만의 실패
            self._fail(state, record, NumericalFailure(f"{type(e).__name__}: {e}"))

        record["seconds"] = time.perf_counter() - started
        state.history.append(HistoryRecord(**record))

    @staticmethod
    def _fail(state: _ChoiceState, record: dict, error: RiccatiError) -> None:
        logger.error(
            f"[Projector] j={record['j']} L={state.choice.label} failed: {error.code} {error.detail}"
        )
        record["flag"] = error.code.lower()
        state.errors.append(error.code)

    @staticmethod
    def _record_breakdown(
        states: List[_ChoiceState],
        brad: Brad,
        shift: complex,
        error: Breakdown,
        started: float,
    ) -> None:
        """부분 rank 손실로 확장이 실패한 step 을 아직 수렴하지 않은 선택마다 기록"""
        for state in states:
            if state.converged:
                continue
            state.errors.append(error.code)
            state.history.append(
                HistoryRecord(
                    j=brad.j + 1,
                    dim=brad.K.shape[1] + brad.p,
                    shift_re=complex(shift).real,
                    shift_im=complex(shift).imag,
                    stored_columns=state.last.rank if state.last else 0,
                    seconds=time.perf_counter() - started,
                    flag=error.code.lower(),
                )
            )


def run(
    problem: CareProblem,
    shifts: ShiftSequence,
    choice: Optional[ProjectorChoice] = None,
    options: Optional[SolveOptions] = None,
) -> RunResult:
    """ProjectionSolver().run 단축형"""
    return ProjectionSolver().run(problem, shifts, choice, options)
