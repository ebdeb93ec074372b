from django.apps import AppConfig


class PrimitivesConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'primitives'
