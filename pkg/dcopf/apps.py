from django.apps import AppConfig


class DcopfConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'dcopf'
    verbose_name = 'DC-OPF Core'
