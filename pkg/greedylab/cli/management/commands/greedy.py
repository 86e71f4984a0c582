from cli.models import TableName

from ._base import ExperimentCommand, json_argument, list_argument


class Command(ExperimentCommand):
    help = "List the m-t-greedy sets of a vector, or check the enumeration against brute force."

    def add_inline_arguments(self, parser):
        parser.add_argument("action", choices=["sets"])
        parser.add_argument("--vector", help="SparseVector JSON")
        parser.add_argument("--m", help="comma-separated sizes")
        parser.add_argument("--t", help="weakness parameter in (0, 1]")
        parser.add_argument("--oracle", action="store_true", help="compare with brute force on seeded vectors")

    def inline_outputs(self, options):
        if options["oracle"]:
            params = {"ts": list_argument(options["t"])} if options["t"] else {}
            return [{"table": TableName.GREEDY_ORACLE, "params": params}]
        params = {}
        if options["vector"]:
            params["vector"] = json_argument(options["vector"], "vector")
        if options["m"]:
            params["m"] = list_argument(options["m"])
        if options["t"]:
            params["t"] = options["t"]
        return [{"table": TableName.GREEDY_SETS, "params": params}]
