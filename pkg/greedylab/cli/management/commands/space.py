from cli.models import TableName

from ._base import ExperimentCommand, json_argument


class Command(ExperimentCommand):
    help = "Evaluate the norm of the chosen space on sparse vectors."

    def add_inline_arguments(self, parser):
        parser.add_argument("action", choices=["eval"])
        parser.add_argument(
            "--vector",
            action="append",
            default=[],
            help='SparseVector JSON, e.g. {"indices": [1, 2], "values": ["1", "-1"]}; repeatable',
        )

    def inline_outputs(self, options):
        params = {}
        if options["vector"]:
            params["vectors"] = [json_argument(text, "vector") for text in options["vector"]]
        return [{"table": TableName.SPACE_EVAL, "params": params}]
