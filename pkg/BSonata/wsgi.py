"""
WSGI config for BSonata project.

It exposes the WSGI callable as a module-level variable named ``application``.
Only used to browse stored runs through the read API (``manage.py runserver``).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'BSonata.settings')

application = get_wsgi_application()
