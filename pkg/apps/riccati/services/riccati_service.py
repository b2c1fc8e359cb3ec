# apps/riccati/services/riccati_service.py
"""
Riccati 서비스 레이어

책임:
- RunConfig 로부터 문제 로딩 / shift 공급
- ProjectionSolver 실행 (solve, compare)
- 결과 파일 쓰기
- fdm 문제를 Matrix Market 으로 내보내기 (generate)

CLI 는 인자 파싱, RunConfig 검증, 종료 코드 매핑만 담당합니다.
"""

import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Protocol

from django.conf import settings

from apps.riccati.exceptions import ConfigError, ShiftsExhausted
from apps.riccati.schemas import FdmSpec, RunConfig
from apps.riccati.services import artifacts
from apps.riccati.services.matrix_market import write_matrix_market
from apps.riccati.services.problem import (
    CareProblem,
    fdm_from_spec,
    load_problem,
)
from apps.riccati.services.projector import (
    ChoiceOutcome,
    ProjectionSolver,
    RunResult,
    residual_denominator,
)
from apps.riccati.services.residual import dense_residual_oracle
from apps.riccati.services.shift_providers import (
    HeuristicShiftProvider,
    IShiftProvider,
    ListShiftProvider,
)

logger = logging.getLogger(__name__)


class CompareStatus(int, enum.Enum):
    """compare 결과 → CLI 종료 코드"""

    ALL_CONVERGED = 0
    NOT_CONVERGED = 2
    PARTIAL = 3


@dataclass(frozen=True)
class SolveReport:
    result: RunResult
    out_dir: Path
    dense_rel_residual: Optional[float] = None


@dataclass(frozen=True)
class CompareReport:
    outcomes: Dict[str, ChoiceOutcome]
    out_dir: Path

    @property
    def status(self) -> CompareStatus:
        outcomes = self.outcomes.values()
        if any(outcome.failed for outcome in outcomes):
            return CompareStatus.PARTIAL
        if not all(outcome.converged for outcome in outcomes):
            return CompareStatus.NOT_CONVERGED
        return CompareStatus.ALL_CONVERGED


class IRiccatiService(Protocol):
    def solve(self, config: RunConfig) -> SolveReport: ...

    def compare(self, config: RunConfig) -> CompareReport: ...

    def generate(self, spec: FdmSpec, out_dir: Path) -> Path: ...


class RiccatiService:
    """
    Riccati 서비스 구현체

    ProjectionSolver 는 생성자 주입 (기본값: ProjectionSolver()).
    """

    def __init__(self, solver: Optional[ProjectionSolver] = None):
        self.solver = solver or ProjectionSolver()

    # ------------------------------------------------------------
    # 입력
    # ------------------------------------------------------------

    def load_problem(self, config: RunConfig) -> CareProblem:
        if config.fdm is not None:
            return fdm_from_spec(config.fdm)
        return load_problem(config.problem)

    def shift_provider(self, config: RunConfig) -> IShiftProvider:
        if config.shifts_file is not None:
            return ListShiftProvider(
                path=config.shifts_file, allow_repeats=config.allow_repeated_shifts
            )
        return HeuristicShiftProvider(count=config.heuristic, seed=config.seed)

    def _check_dense_verify(self, config: RunConfig, problem: CareProblem) -> None:
        if config.dense_verify and problem.n > settings.DENSE_CAP:
            raise ConfigError(
                f"--dense-verify needs n <= {settings.DENSE_CAP}, got n={problem.n}"
            )

    def _prepare(self, config: RunConfig):
        problem = self.load_problem(config)
        self._check_dense_verify(config, problem)
        provider = self.shift_provider(config)
        shifts = provider.get_shifts(problem)
        logger.info(
            f"[Service] n={problem.n} m={problem.m} p={problem.p} "
            f"{len(shifts)} shifts from {provider.provider_name}"
        )
        out = artifacts.prepare_out_dir(config.out)
        artifacts.write_config(out, config)
        return problem, shifts, out

    # ------------------------------------------------------------
    # solve / compare
    # ------------------------------------------------------------

    def solve(self, config: RunConfig) -> SolveReport:
        """
        단일 L 선택으로 실행하고 결과 파일을 씁니다.

        Raises:
            ShiftsExhausted: 허용오차 미달 (best-so-far 파일은 쓴 뒤 다시 raise)
        """
        problem, shifts, out = self._prepare(config)
        label = config.choice.label
        try:
            result = self.solver.run(problem, shifts, config.choice, config.options)
        except ShiftsExhausted as e:
            self._write_run(config, problem, out, e.result, label, converged=False)
            raise
        dense_rel = self._write_run(config, problem, out, result, label, converged=True)
        return SolveReport(result=result, out_dir=out, dense_rel_residual=dense_rel)

    def _write_run(
        self,
        config: RunConfig,
        problem: CareProblem,
        out: Path,
        result: RunResult,
        label: str,
        converged: bool,
    ) -> Optional[float]:
        curves = {label: result.history}
        artifacts.write_history_json(out, curves)
        artifacts.write_history_csv(out, curves)
        if result.solution is None:
            logger.warning("[Service] no iterate to write")
            return None

        extra = {}
        dense_rel = None
        if config.dense_verify:
            dense_rel = self.dense_verify(problem, result.solution, config)
            extra["dense_rel_residual"] = dense_rel
        metadata = artifacts.solution_metadata(result.solution, label, converged, extra)
        artifacts.write_solution(out, result.solution, metadata, mm_out=config.mm_out)
        return dense_rel

    def dense_verify(self, problem: CareProblem, solution, config: RunConfig) -> float:
        """dense 잔차로 압축 잔차를 교차 검증 (n <= DENSE_CAP)"""
        kind = config.options.norm
        rel = dense_residual_oracle(problem, solution.dense(), kind) / residual_denominator(
            problem, config.options
        )
        logger.info(f"[Service] dense relative residual {rel:.3e}")
        return rel

    def compare(self, config: RunConfig) -> CompareReport:
        """
        여러 L 선택을 하나의 공유 BRAD 위에서 실행

        choice 별 실패는 격리되며 병합 history 와 choice 별 해를 씁니다.
        """
        problem, shifts, out = self._prepare(config)
        outcomes = self.solver.compare(problem, shifts, config.choices, config.options)

        curves = {label: outcome.history for label, outcome in outcomes.items()}
        artifacts.write_history_json(out, curves)
        artifacts.write_history_csv(out, curves, keyed=True)

        for label, outcome in outcomes.items():
            if outcome.solution is None:
                continue
            choice_dir = artifacts.prepare_out_dir(out / _dir_name(label))
            metadata = artifacts.solution_metadata(
                outcome.solution, label, outcome.converged, {"errors": list(outcome.errors)}
            )
            artifacts.write_solution(choice_dir, outcome.solution, metadata, mm_out=config.mm_out)

        report = CompareReport(outcomes=outcomes, out_dir=out)
        logger.info(
            "[Service] compare: "
            + ", ".join(
                f"{label}={'converged' if o.converged else ('failed' if o.failed else 'exhausted')}"
                for label, o in outcomes.items()
            )
        )
        return report

    # ------------------------------------------------------------
    # generate
    # ------------------------------------------------------------

    def generate(self, spec: FdmSpec, out_dir: Path) -> Path:
        """fdm 문제를 A.mtx, B.mtx, C.mtx, manifest.json 으로 저장"""
        problem = fdm_from_spec(spec)
        out = artifacts.prepare_out_dir(out_dir)
        comment = f"fdm {spec.model_dump_json()}"
        write_matrix_market(out / "A.mtx", problem.A, comment=comment)
        write_matrix_market(out / "B.mtx", problem.B, comment=comment)
        write_matrix_market(out / "C.mtx", problem.C, comment=comment)

        manifest = out / "manifest.json"
        manifest.write_text(
            json.dumps({"A": "A.mtx", "B": "B.mtx", "C": "C.mtx"}, indent=2),
            encoding="utf-8",
        )
        logger.info(f"[Service] generated n={problem.n} problem in {out}")
        return manifest


def _dir_name(label: str) -> str:
    return label.replace(":", "_").replace(",", "_")


# 전역 인스턴스 (싱글톤 패턴)
_riccati_service_instance = None


def get_riccati_service(solver: Optional[ProjectionSolver] = None) -> RiccatiService:
    """
    Riccati 서비스 인스턴스 반환 (팩토리 함수)

    Args:
        solver: ProjectionSolver (테스트용)
    """
    global _riccati_service_instance

    if solver is not None:
        return RiccatiService(solver=solver)

    if _riccati_service_instance is None:
        _riccati_service_instance = RiccatiService()

    return _riccati_service_instance
