from cli.models import TableName

from ._base import ExperimentCommand

VERIFY_TABLES = (
    TableName.LEMMA71,
    TableName.EX72_SANDWICH,
    TableName.EX72_CONDITIONALITY,
    TableName.EX72_QG,
    TableName.EX74_CERTIFICATES,
    TableName.EX76_CERTIFICATES,
    TableName.LEMMA75,
    TableName.LEMMA77,
    TableName.XP_EXACTNESS,
)


class Command(ExperimentCommand):
    help = "Run the inequality suites and certificates of the preset constructions."

    def add_inline_arguments(self, parser):
        parser.add_argument("action", choices=["verify"])
        parser.add_argument(
            "checks",
            nargs="*",
            choices=[str(name) for name in VERIFY_TABLES] + [str(TableName.DEMOCRACY_PROFILE)],
            help="checks to run; all suites when omitted",
        )

    def inline_outputs(self, options):
        return [str(name) for name in options["checks"] or VERIFY_TABLES]
