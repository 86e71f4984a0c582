from cli.models import TableName

from ._base import ExperimentCommand, json_argument, list_argument


class Command(ExperimentCommand):
    help = "Best approximation of a vector by vectors supported in given index sets."

    def add_inline_arguments(self, parser):
        parser.add_argument("--vector", help="SparseVector JSON")
        parser.add_argument("--set", action="append", default=[], help="comma-separated indices; repeatable")

    def inline_outputs(self, options):
        params = {}
        if options["vector"]:
            params["vector"] = json_argument(options["vector"], "vector")
        if options["set"]:
            params["sets"] = [list_argument(text) for text in options["set"]]
        return [{"table": TableName.CHEB, "params": params}]
