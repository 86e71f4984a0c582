from cli.models import TableName
from spaces.exceptions import ConfigError

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Evaluate closed-form constant bounds; unset inputs take their canonical value 1."

    def add_inline_arguments(self, parser):
        parser.add_argument("--formula", action="append", default=[], help="formula tag; repeatable, all when omitted")
        parser.add_argument("--input", action="append", default=[], help="NAME=VALUE, applied to every formula")

    def inline_outputs(self, options):
        inputs = {}
        for item in options["input"]:
            name, sep, value = item.partition("=")
            if not sep or not name:
                raise ConfigError(f"expected NAME=VALUE, got {item!r}", pointer="input")
            inputs[name.strip()] = value.strip()
        params = {}
        if options["formula"]:
            params["formulas"] = {tag: dict(inputs) for tag in options["formula"]}
        elif inputs:
            raise ConfigError("--input needs at least one --formula", pointer="input")
        return [{"table": TableName.BOUNDS, "params": params}]
