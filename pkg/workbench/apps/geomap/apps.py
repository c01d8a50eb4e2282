from django.apps import AppConfig


class GeomapConfig(AppConfig):
    name = "apps.geomap"
    verbose_name = "Geomagnetic maps"
