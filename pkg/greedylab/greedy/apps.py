from django.apps import AppConfig


class GreedyConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "greedy"
