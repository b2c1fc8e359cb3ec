# apps/riccati/management/base.py
"""
management command 공통 베이스

각 명령은 인자를 RunConfig 로 검증한 뒤 서비스 레이어를 호출하고,
결과를 JSON 한 줄로 stdout 에 출력합니다. 0 이 아닌 종료 코드는 CommandError(returncode=...) 로 전달합니다.

종료 코드: 0 수렴, 1 치명적 오류, 2 shift 소진, 3 compare 부분 실패
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from apps.riccati.exceptions import RiccatiError
from apps.riccati.schemas import (
    FdmSpec,
    ProjectorChoice,
    RunConfig,
    SolveOptions,
    TruncationPolicy,
)
from apps.riccati.services.riccati_service import IRiccatiService, get_riccati_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1


def validation_response(e: Exception) -> Dict[str, Any]:
    if isinstance(e, ValidationError):
        errors = e.errors(include_url=False)
    else:
        errors = [{"msg": str(e)}]
    return {"success": False, "code": "INVALID_ARGUMENTS", "errors": errors}


def history_summary(history) -> Dict[str, Any]:
    last = history.last
    return {
        "steps": len(history),
        "converged": history.converged,
        "last": None if last is None else last.model_dump(mode="json", exclude={"seconds"}),
    }


def add_run_arguments(parser) -> None:
    """solve / compare 공통 인자"""
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--problem", type=Path, help="problem manifest (JSON)")
    source.add_argument("--fdm", help="generator spec G[,FX,FY,BLO:BHI,CLO:CHI]")

    shifts = parser.add_mutually_exclusive_group()
    shifts.add_argument("--shifts", type=Path, help="shift file (JSON list or 're im' lines)")
    shifts.add_argument("--heuristic", type=int, metavar="J", help="built-in heuristic with J shifts")
    parser.add_argument("--allow-repeated-shifts", action="store_true")
    parser.add_argument("--seed", type=int, default=None, help="seed for the heuristic estimate")

    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--max-blocks", type=int, default=None)
    parser.add_argument("--truncate", action="store_true")
    parser.add_argument("--tau", type=float, default=1e-12)
    parser.add_argument("--norm", choices=("fro", "2"), default="fro")
    parser.add_argument("--denominator", choices=("cch", "chc", "abs"), default="cch")
    parser.add_argument("--mm-out", action="store_true", help="write Z.mtx / Y.mtx instead of solution.npz")
    parser.add_argument("--dense-verify", action="store_true", help="dense residual check (small n)")
    parser.add_argument("--out", type=Path, default=Path("out"))


def build_run_config(options: Dict[str, Any], choices: List[str]) -> RunConfig:
    """
    parse 된 옵션 → RunConfig

    Raises:
        ValidationError / ValueError: 인자 검증 실패
    """
    solve_options = SolveOptions(
        tol=options["tol"],
        max_blocks=options["max_blocks"],
        truncate=options["truncate"],
        policy=TruncationPolicy(tau=options["tau"]),
        norm=options["norm"],
        denominator=options["denominator"],
    )
    return RunConfig(
        problem=options["problem"],
        fdm=FdmSpec.parse(options["fdm"]) if options["fdm"] else None,
        shifts_file=options["shifts"],
        heuristic=options["heuristic"],
        allow_repeated_shifts=options["allow_repeated_shifts"],
        choices=[ProjectorChoice.parse(text) for text in choices],
        options=solve_options,
        out=options["out"],
        mm_out=options["mm_out"],
        dense_verify=options["dense_verify"],
        seed=options["seed"],
    )


class RiccatiCommand(BaseCommand):
    """
    riccati-rk 명령 베이스

    서비스는 생성자 주입 (기본값: service_factory()).
    """

    requires_system_checks = []
    service_factory = staticmethod(get_riccati_service)

    def __init__(self, *args, riccati_service: Optional[IRiccatiService] = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.riccati_service = riccati_service

    def get_service(self) -> IRiccatiService:
        return self.riccati_service or self.service_factory()

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        usage_error = parser.error

        def error(message):
            try:
                usage_error(message)
            except SystemExit:
                # argparse 는 사용법 오류에 2 로 종료 (2 는 shift 소진)
                sys.exit(EXIT_FATAL)

        parser.error = error
        return parser

    def emit(self, payload: Dict[str, Any]) -> None:
        self.stdout.write(json.dumps(payload, default=str))

    def fail(self, payload: Dict[str, Any], returncode: int, message: str) -> NoReturn:
        self.emit(payload)
        raise CommandError(message, returncode=returncode)

    def fail_invalid(self, e: Exception) -> NoReturn:
        logger.error(f"[Command] invalid arguments: {e}")
        self.fail(validation_response(e), EXIT_FATAL, "invalid arguments")

    def fail_error(self, e: Exception) -> NoReturn:
        """RiccatiError / OSError → JSON 응답 + 종료 코드"""
        if isinstance(e, RiccatiError):
            logger.error(f"[Command] {e.code}: {e.detail}")
            self.fail(e.get_response(), e.exit_code, f"{e.code}: {e.detail}")
        logger.error(f"[Command] I/O error: {e}")
        self.fail(
            {"success": False, "code": "IO_ERROR", "message": str(e), "data": {}},
            EXIT_FATAL,
            f"IO_ERROR: {e}",
        )
