import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from cli.reports import csv_text, run
from cli.serializers import load_config
from spaces.exceptions import ConfigError

CONFIG_ERROR = 2
CHECK_FAILED = 1


def json_argument(text, pointer):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", pointer=pointer)


def list_argument(text):
    """``"1,2,3"`` as ``["1", "2", "3"]``; the serializers do the typing."""
    return [item.strip() for item in text.split(",") if item.strip()]


class ExperimentCommand(BaseCommand):
    """Shared flags and the run-and-report cycle of every greedylab subcommand.

    Subclasses turn their inline arguments into table requests; with
    ``--config`` the file's own outputs are used instead.
    """

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON experiment document")
        parser.add_argument("--seed", type=int, help="master seed (u64)")
        parser.add_argument("--out", help="directory for the CSV and JSON bundle; CSV goes to stdout otherwise")
        parser.add_argument("--jobs", type=int, default=1, help="tables built in parallel")
        parser.add_argument("--budget", help="budget profile: smoke, default or thorough")
        parser.add_argument("--space", help="preset name such as ex72 or cor78:almost_greedy")
        parser.add_argument("--weight", help="Weight JSON")
        parser.add_argument("--p", type=float, help="exponent of the X_p component")
        self.add_inline_arguments(parser)

    def add_inline_arguments(self, parser):
        pass

    def inline_outputs(self, options):
        raise NotImplementedError

    def document(self, options):
        if options["config"]:
            path = Path(options["config"])
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read {path}: {exc.strerror}", pointer="config")
            document = json_argument(text, "config")
            if not isinstance(document, dict):
                raise ConfigError("the config must be a JSON object", pointer="config")
        else:
            document = {"outputs": self.inline_outputs(options)}
        for key in ("seed", "budget", "space", "p"):
            if options[key] is not None:
                document[key] = options[key]
        if options["weight"]:
            document["weight"] = json_argument(options["weight"], "weight")
        return document

    def handle(self, *args, **options):
        if options["jobs"] < 1:
            raise CommandError("--jobs must be at least 1", returncode=CONFIG_ERROR)
        try:
            config = load_config(self.document(options))
        except ConfigError as exc:
            raise CommandError(f"invalid config: {exc}", returncode=CONFIG_ERROR)

        bundle = run(config, out=options["out"], jobs=options["jobs"])
        if options["out"]:
            self.stdout.write(f"Wrote {len(bundle.tables)} tables to {options['out']}")
        else:
            for result in bundle.tables:
                self.stdout.write(csv_text(result), ending="")
        if not bundle.passed:
            failures = bundle.failures
            raise CommandError(
                f"{len(failures)} checks failed, first in {failures[0]['table']}: {failures[0]['message'] or 'inequality violated'}",
                returncode=CHECK_FAILED,
            )
