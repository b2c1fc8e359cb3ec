from apps.riccati.services.shift_providers.base import IShiftProvider
from apps.riccati.services.shift_providers.heuristic_provider import HeuristicShiftProvider
from apps.riccati.services.shift_providers.list_provider import ListShiftProvider

__all__ = ["IShiftProvider", "HeuristicShiftProvider", "ListShiftProvider"]
