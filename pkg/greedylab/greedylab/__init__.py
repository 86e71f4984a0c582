# Load the Celery app with Django so that cli.tasks binds to it.
from .celery import app as celery_app

__all__ = ('celery_app',)
