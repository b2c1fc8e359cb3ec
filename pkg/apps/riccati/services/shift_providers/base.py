# apps/riccati/services/shift_providers/base.py
"""
Shift Provider 기본 인터페이스

shift 를 공급하는 모든 소스(파일, 목록, heuristic)가 구현하는 공통 인터페이스
"""

from typing import Protocol

from apps.riccati.services.problem import CareProblem
from apps.riccati.services.shifts import ShiftSequence


class IShiftProvider(Protocol):
    """
    Shift Provider 인터페이스

    외부에서 계산된 shift 가 1순위이고, 내장 heuristic 은 문서화된 대안입니다.
    """

    @property
    def provider_name(self) -> str:
        """
        Provider 이름

        Returns:
            str: Provider 식별자 (예: "list", "heuristic")
        """
        ...

    def get_shifts(self, problem: CareProblem) -> ShiftSequence:
        """
        shift 열 생성

        Args:
            problem: 검증된 CARE 문제

        Returns:
            ShiftSequence: 입력 순서가 보존된 shift 열
        """
        ...
