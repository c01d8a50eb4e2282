from django.apps import AppConfig


class RssImageConfig(AppConfig):
    name = "apps.rss_image"
    verbose_name = "RSS images"
