# apps/riccati/management/commands/compare.py
from apps.riccati.exceptions import RiccatiError
from apps.riccati.management.base import (
    RiccatiCommand,
    add_run_arguments,
    build_run_config,
    history_summary,
)

DEFAULT_COMPARE_CHOICES = ("K", "H", "combo:1,1")


class Command(RiccatiCommand):
    help = "Run several projector choices on one shared rational Krylov subspace"

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument(
            "--L", action="append", default=None, help="repeatable (default: K, H, combo:1,1)"
        )

    def handle(self, *args, **options):
        service = self.get_service()

        try:
            config = build_run_config(options, options["L"] or list(DEFAULT_COMPARE_CHOICES))
        except ValueError as e:
            self.fail_invalid(e)

        try:
            report = service.compare(config)
        except (RiccatiError, OSError) as e:
            self.fail_error(e)

        status = int(report.status)
        payload = {
            "success": status == 0,
            "data": {
                "out": str(report.out_dir),
                "choices": {
                    label: {
                        **history_summary(outcome.history),
                        "failed": outcome.failed,
                        "errors": list(outcome.errors),
                    }
                    for label, outcome in report.outcomes.items()
                },
            },
        }
        if status != 0:
            self.fail(payload, status, f"comparison finished with status {status}")
        self.emit(payload)
