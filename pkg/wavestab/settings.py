"""
Django settings for the wavestab project.

Only infrastructure lives here (logging, workers, output locations and the
numerical guard rails). Experiment parameters come from JSON run configs,
never from the environment.
"""
import ast
import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("SECRET_KEY", "wavestab-local-only")

DEBUG_ENV = os.getenv("DEBUG")

DEBUG = ast.literal_eval(DEBUG_ENV) if DEBUG_ENV is not None else False

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',

    # third party apps
    'rest_framework',

    # my_apps
    'core',
    'semidiscrete',
    'spectral',
    'filtering',
    'dynamics',
    'experiments',
]

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            # SVG output, not HTML
            'autoescape': False,
        },
    },
]

# No models are stored; the database is only here so management commands and
# the test runner have a default alias.
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": BASE_DIR / "db.sqlite3",
    },
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "wavestab": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "wavestab",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": LOG_LEVEL,
    },
}

# Celery: grid commands fan out one task per grid point. Eager by default so a
# desk run needs no broker.
redis_url = os.getenv("REDIS_URL")

CELERY_TASK_ALWAYS_EAGER = ast.literal_eval(os.getenv("CELERY_TASK_ALWAYS_EAGER", "True"))
CELERY_TASK_EAGER_PROPAGATES = True
CELERY_BROKER_URL = f"{redis_url}/2" if redis_url else "memory://"
CELERY_RESULT_BACKEND = f"{redis_url}/3" if redis_url else "cache+memory://"
CELERY_ACCEPT_CONTENT = ["json"]
CELERY_TASK_SERIALIZER = "json"
CELERY_RESULT_SERIALIZER = "json"
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 30 * 60

# Experiment outputs
WAVESTAB_OUTPUT_DIR = Path(os.getenv("WAVESTAB_OUTPUT_DIR", BASE_DIR / "runs"))
WAVESTAB_PRESETS_DIR = BASE_DIR / "experiments" / "presets"
WAVESTAB_SUMMARY_SCHEMA = BASE_DIR / "experiments" / "schemas" / "run_summary.schema.json"

# Numerical guard rails
WAVESTAB_DENSE_MAX_N = 2000
WAVESTAB_ROOT_TOL = 1e-13
WAVESTAB_ROOT_MAX_ITER = 200
WAVESTAB_RESIDUAL_TOL = 1e-8
WAVESTAB_CONDITION_LIMIT = 1e12
