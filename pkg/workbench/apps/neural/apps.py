from django.apps import AppConfig


class NeuralConfig(AppConfig):
    name = "apps.neural"
    verbose_name = "Neural layers"
