from django.apps import AppConfig


class PushsumConfig(AppConfig):
    name = 'pushsum'
