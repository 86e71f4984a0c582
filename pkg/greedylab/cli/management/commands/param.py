from cli.models import TableName

from ._base import ExperimentCommand, list_argument


class Command(ExperimentCommand):
    help = "Certified lower bounds of Lebesgue-type parameters."

    def add_inline_arguments(self, parser):
        parser.add_argument("--kind", action="append", default=[], help="estimator kind such as g_bar or L_a; repeatable")
        parser.add_argument("--m", help="comma-separated sizes")
        parser.add_argument("--t", help="weakness parameter in (0, 1]")

    def inline_outputs(self, options):
        params = {}
        if options["kind"]:
            params["kinds"] = options["kind"]
        if options["m"]:
            params["m"] = list_argument(options["m"])
        if options["t"]:
            params["t"] = options["t"]
        return [{"table": TableName.PARAM, "params": params}]
