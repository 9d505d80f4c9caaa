"""
Django settings for BSonata project.

Block-wise push-sum consensus and the B-SONATA optimizer, driven from
``manage.py`` management commands. The database only stores experiment runs
saved with ``--save``; every numerical app is database-free.

Environment variables (read through python-decouple, ``.env`` supported):
    SECRET_KEY        Django secret, a local default is fine for the CLI
    DEBUG             False by default
    LOG_LEVEL         level of the project loggers (INFO)
    BSONATA_THREADS   worker threads for sweeps (1)
    DB_NAME           sqlite file holding stored runs
"""

from pathlib import Path
from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# The secret only protects admin sessions of the local run browser.
SECRET_KEY = config('SECRET_KEY', default='bsonata-local-secret-key-change-me')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    # Third-party
    'rest_framework',
    'django_filters',
    'drf_spectacular',
    # Local apps
    'graphs',
    'schedule',
    'pushsum',
    'problems',
    'core',
    'harness',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'BSonata.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'BSonata.wsgi.application'


# Database: stored runs only

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': config('DB_NAME', default=str(BASE_DIR / 'bsonata.sqlite3')),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

STATIC_URL = 'static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

# ─── Simulation ──────────────────────────────────────────────────────────────
# Thread count is the only parallelism knob; results never depend on it.
BSONATA_THREADS = config('BSONATA_THREADS', default=1, cast=int)

# ─── Logging ─────────────────────────────────────────────────────────────────
LOG_LEVEL = config('LOG_LEVEL', default='INFO')

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
    'loggers': {
        app: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for app in ('graphs', 'schedule', 'pushsum', 'problems', 'core', 'harness')
    },
}

# REST Framework: the run browser is local and read-only
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': (),
    'DEFAULT_PERMISSION_CLASSES': (
        'rest_framework.permissions.AllowAny',
    ),
    'DEFAULT_FILTER_BACKENDS': [
        'django_filters.rest_framework.DjangoFilterBackend',
        'rest_framework.filters.OrderingFilter',
    ],
    'DEFAULT_PAGINATION_CLASS': 'rest_framework.pagination.PageNumberPagination',
    'PAGE_SIZE': 20,
    'DEFAULT_SCHEMA_CLASS': 'drf_spectacular.openapi.AutoSchema',
    'UNAUTHENTICATED_USER': None,
}

# Swagger / OpenAPI (drf-spectacular)
SPECTACULAR_SETTINGS = {
    'TITLE': 'BSonata run browser',
    'DESCRIPTION': (
        'Read-only access to experiment runs stored with `manage.py run --save` '
        'or `manage.py sweep --save`.\n\n'
        '## Metrics\n'
        '| field | meaning |\n|---|---|\n'
        '| J | stationarity merit of the weighted average |\n'
        '| D | consensus disagreement of the local estimates |\n'
        '| R | disagreement of the gradient trackers |'
    ),
    'VERSION': '1.0.0',
    'SERVE_INCLUDE_SCHEMA': False,
}
