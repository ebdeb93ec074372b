"""
Development settings for the Splatfield project.
Use this for local experiments and the test suite.
"""

from dotenv import load_dotenv
load_dotenv()  # Load .env file before base reads the environment

from .base import *

# SECURITY WARNING: nothing is served, the key only satisfies Django's checks.
SECRET_KEY = 'django-insecure-splatfield-local-experiments-only'

DEBUG = True

ALLOWED_HOSTS = []
