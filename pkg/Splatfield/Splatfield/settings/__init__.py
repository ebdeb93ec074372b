# Settings package
# By default, use development settings
from .dev import *
