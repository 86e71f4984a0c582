import logging

from celery import shared_task

from .tables import execute_table

logger = logging.getLogger(__name__)


@shared_task
def run_table_task(config_json, table_name, position=None):
    """Build one report table on a worker; the result is the JSON form of a ``TableResult``."""
    logger.info(f"Worker building table {table_name}")
    return execute_table(config_json, table_name, position)
