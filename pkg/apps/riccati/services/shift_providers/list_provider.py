# apps/riccati/services/shift_providers/list_provider.py
"""
목록 / 파일 기반 Shift Provider

외부 도구(RADI 류 shift 생성기)가 미리 계산한 shift 를 그대로 씁니다.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

from apps.riccati.exceptions import ConfigError
from apps.riccati.services.problem import CareProblem
from apps.riccati.services.shifts import ShiftSequence, from_list, read_shift_file

logger = logging.getLogger(__name__)


class ListShiftProvider:
    """values 또는 path 중 하나로 생성"""

    def __init__(
        self,
        values: Optional[Sequence[complex]] = None,
        path: Optional[Path] = None,
        allow_repeats: bool = False,
    ):
        if (values is None) == (path is None):
            raise ConfigError("ListShiftProvider needs exactly one of values or path")
        self.values = values
        self.path = path
        self.allow_repeats = allow_repeats

    @property
    def provider_name(self) -> str:
        return "list"

    def get_shifts(self, problem: CareProblem) -> ShiftSequence:
        if self.path is not None:
            shifts = read_shift_file(self.path, allow_repeats=self.allow_repeats)
            logger.info(f"[ListProvider] read {len(shifts)} shifts from {self.path}")
        else:
            shifts = from_list(self.values, allow_repeats=self.allow_repeats)
        if not shifts.conjugate_closed:
            logger.debug("[ListProvider] shift list is not closed under conjugation")
        return shifts
