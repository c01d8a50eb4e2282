from django.apps import AppConfig


class MobilityConfig(AppConfig):
    name = "apps.mobility"
    verbose_name = "Mobility traces"
