"""
Django settings for greedylab project.

The project has no database models; Django supplies the app registry,
management commands, the cache layer and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

from pathlib import Path
import environ
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environ
env = environ.Env(
    DEBUG=(bool, False),
    SECRET_KEY=(str, 'greedylab-dev-key'),
    CELERY_TASK_ALWAYS_EAGER=(bool, True),
    GREEDYLAB_ENUM_CAP=(int, 20),
    GREEDYLAB_FAMILY_CAP=(int, 200000),
    GREEDYLAB_POOL_CAP=(int, 24),
    GREEDYLAB_CHEB_MAX_SET=(int, 32),
    GREEDYLAB_DIRECT_SUM_LIMIT=(int, 10**6),
    GREEDYLAB_DUAL_MAX_DIM=(int, 64),
    GREEDYLAB_SIGNED_CAP=(int, 50_000_000),
    GREEDYLAB_LOG_LEVEL=(str, 'INFO'),
)

# Take environment variables from .env file
env_file = os.path.join(os.path.dirname(__file__), '.env')
if os.path.exists(env_file):
    environ.Env.read_env(env_file)

SECRET_KEY = env('SECRET_KEY')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []

# Application definition

INSTALLED_APPS = [
    "rest_framework",
    "spaces",
    "greedy",
    "params",
    "constructions",
    "cli",
]

DATABASES = {
    'default': env.db('DATABASE_URL', default='sqlite:///db.sqlite3')
}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Enclosure memoization; GREEDYLAB_CACHE=redis://host:6379/1 switches to Redis
CACHES = {
    'default': env.cache('GREEDYLAB_CACHE', default='locmemcache://'),
}


# Computation caps
GREEDYLAB_ENUM_CAP = env('GREEDYLAB_ENUM_CAP')
GREEDYLAB_FAMILY_CAP = env('GREEDYLAB_FAMILY_CAP')
GREEDYLAB_POOL_CAP = env('GREEDYLAB_POOL_CAP')
GREEDYLAB_CHEB_MAX_SET = env('GREEDYLAB_CHEB_MAX_SET')
GREEDYLAB_DIRECT_SUM_LIMIT = env('GREEDYLAB_DIRECT_SUM_LIMIT')
GREEDYLAB_DUAL_MAX_DIM = env('GREEDYLAB_DUAL_MAX_DIM')
GREEDYLAB_SIGNED_CAP = env('GREEDYLAB_SIGNED_CAP')

# Named budgets for --budget; a config file may override single fields
GREEDYLAB_BUDGET_PROFILES = {
    'smoke': {
        'candidates': 40,
        'pool_size': 8,
        'max_sets': 2000,
        'solver_iterations': 300,
        'random_starts': 1,
    },
    'default': {
        'candidates': 200,
        'pool_size': 10,
        'max_sets': 20000,
        'solver_iterations': 1500,
        'random_starts': 2,
    },
    'thorough': {
        'candidates': 2000,
        'pool_size': 14,
        'max_sets': 200000,
        'solver_iterations': 6000,
        'random_starts': 4,
    },
}


# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': env('GREEDYLAB_LOG_LEVEL'),
            'propagate': False,
        }
        for app in ('spaces', 'greedy', 'params', 'constructions', 'cli')
    },
}


# Celery settings
CELERY_BROKER_URL = env('REDIS_URL', default='redis://localhost:6379/0')
CELERY_RESULT_BACKEND = env('REDIS_URL', default='redis://localhost:6379/0')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_ALWAYS_EAGER = env('CELERY_TASK_ALWAYS_EAGER')
