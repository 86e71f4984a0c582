from cli.models import TableName

from ._base import ExperimentCommand


class Command(ExperimentCommand):
    help = "Run a full experiment; without --config every table is built with its defaults."

    def inline_outputs(self, options):
        return list(TableName.values)
