import os
from celery import Celery

# Set the default Django settings module for the 'celery' program.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'greedylab.settings')

app = Celery('greedylab')

# Report tables are dispatched as tasks when a broker is configured;
# CELERY_TASK_ALWAYS_EAGER keeps them in-process otherwise.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Picks up cli.tasks
app.autodiscover_tasks()
