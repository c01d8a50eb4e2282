from django.apps import AppConfig


class FingerprintsConfig(AppConfig):
    name = "apps.fingerprints"
    verbose_name = "Fingerprint databases"
