# apps/riccati/management/commands/generate.py
from pathlib import Path

from apps.riccati.exceptions import RiccatiError
from apps.riccati.management.base import RiccatiCommand
from apps.riccati.schemas import FdmSpec


class Command(RiccatiCommand):
    help = "Write a convection-diffusion test problem as Matrix Market files plus a manifest"

    def add_arguments(self, parser):
        parser.add_argument("--fdm", required=True, help="generator spec G[,FX,FY,BLO:BHI,CLO:CHI]")
        parser.add_argument("--out", type=Path, default=Path("."))

    def handle(self, *args, **options):
        service = self.get_service()

        try:
            spec = FdmSpec.parse(options["fdm"])
        except ValueError as e:
            self.fail_invalid(e)

        try:
            manifest = service.generate(spec, Path(options["out"]))
        except (RiccatiError, OSError) as e:
            self.fail_error(e)

        self.emit({"success": True, "data": {"manifest": str(manifest), "n": spec.grid**2}})
