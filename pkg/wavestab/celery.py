import os

from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'wavestab.settings')

app = Celery('wavestab')

# CELERY_* settings from the Django settings module; eager unless a broker is configured
app.config_from_object('django.conf:settings', namespace='CELERY')

# grid points of the observability and decay-report verbs
app.conf.task_routes = {
    'experiments.tasks.*': {'queue': 'grid'},
}
app.conf.worker_prefetch_multiplier = 1

app.autodiscover_tasks()
