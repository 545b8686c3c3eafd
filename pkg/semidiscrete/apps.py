from django.apps import AppConfig


class SemidiscreteConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'semidiscrete'
    verbose_name = "FD / FEM semi-discrete systems"
