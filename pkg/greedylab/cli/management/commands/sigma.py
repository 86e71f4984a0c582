from cli.models import TableName

from ._base import ExperimentCommand, json_argument, list_argument


class Command(ExperimentCommand):
    help = "Best m-term approximation errors of a vector over the budget pool."

    def add_inline_arguments(self, parser):
        parser.add_argument("--vector", help="SparseVector JSON")
        parser.add_argument("--m", help="comma-separated sizes")

    def inline_outputs(self, options):
        params = {}
        if options["vector"]:
            params["vector"] = json_argument(options["vector"], "vector")
        if options["m"]:
            params["m"] = list_argument(options["m"])
        return [{"table": TableName.SIGMA, "params": params}]
