from django.apps import AppConfig


class RiccatiConfig(AppConfig):
    name = "apps.riccati"
    verbose_name = "Riccati low-rank solver"
