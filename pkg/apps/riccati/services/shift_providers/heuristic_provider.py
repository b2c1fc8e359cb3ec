# apps/riccati/services/shift_providers/heuristic_provider.py
"""
내장 heuristic Shift Provider

스펙트럼 추정이 실패하면 고정 구간 [-1e6, -1] 의 로그 간격 shift 로 폴백합니다.
"""

import logging
from typing import Optional

from apps.riccati.exceptions import EstimateFailure
from apps.riccati.services.problem import CareProblem
from apps.riccati.services.shifts import ShiftSequence, fallback_shifts, heuristic_shifts

logger = logging.getLogger(__name__)


class HeuristicShiftProvider:
    def __init__(self, count: int, seed: Optional[int] = None):
        """
        Args:
            count: shift 개수 J
            seed: 추정용 seed (기본값: settings.SEED)
        """
        self.count = count
        self.seed = seed

    @property
    def provider_name(self) -> str:
        return "heuristic"

    def get_shifts(self, problem: CareProblem) -> ShiftSequence:
        try:
            return heuristic_shifts(problem, self.count, seed=self.seed)
        except EstimateFailure as e:
            logger.warning(
                f"[HeuristicProvider] spectral estimate failed ({e.detail}); "
                f"falling back to {self.count} shifts in [-1e6, -1]"
            )
            return fallback_shifts(self.count)
