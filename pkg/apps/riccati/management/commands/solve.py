# apps/riccati/management/commands/solve.py
from apps.riccati.exceptions import RiccatiError, ShiftsExhausted
from apps.riccati.management.base import (
    RiccatiCommand,
    add_run_arguments,
    build_run_config,
    history_summary,
)


class Command(RiccatiCommand):
    help = "Solve a CARE with one projector choice (L = K, H or combo:ALPHA,BETA)"

    def add_arguments(self, parser):
        add_run_arguments(parser)
        parser.add_argument("--L", default="K", help="K | H | combo:ALPHA,BETA")

    def handle(self, *args, **options):
        service = self.get_service()

        try:
            config = build_run_config(options, [options["L"]])
        except ValueError as e:
            self.fail_invalid(e)

        try:
            report = service.solve(config)
        except ShiftsExhausted as e:
            response = e.get_response()
            if e.result is not None:
                response["data"] = history_summary(e.result.history)
            self.fail(response, e.exit_code, f"{e.detail}; best-so-far written to {config.out}")
        except (RiccatiError, OSError) as e:
            self.fail_error(e)

        data = history_summary(report.result.history)
        data["out"] = str(report.out_dir)
        if report.dense_rel_residual is not None:
            data["dense_rel_residual"] = report.dense_rel_residual
        self.emit({"success": True, "data": data})
