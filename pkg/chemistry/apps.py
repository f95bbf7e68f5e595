from django.apps import AppConfig


class ChemistryConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'chemistry'
