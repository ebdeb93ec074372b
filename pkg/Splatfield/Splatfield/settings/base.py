"""
Django base settings for the Splatfield project.
Common settings shared by every environment.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'field',
    'centers',
    'primitives',
    'estimator',
    'sweep',
    'cli',
]

# No persistence: experiments write CSV/JSON artifacts, never rows.
DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# =============================================================================
# Numerical defaults
# =============================================================================

def _env_float(name, default):
    value = os.environ.get(name)
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.environ.get(name)
    return int(value) if value not in (None, '') else default


SPLATFIELD = {
    # Midpoint tensor quadrature, nodes per axis
    'QUADRATURE_NODES': {2: 128, 3: 48},
    # Shepard normalization
    'DENOMINATOR_FLOOR': _env_float('SPLATFIELD_DENOM_FLOOR', 1e-30),
    'SUPPORT_THRESHOLD': 1e-250,
    # Oracle scaffold
    'ORACLE_SCALE_FACTOR': 1.0,
    'ORACLE_WEIGHT': 0.5,
    # Admissible axis scales, in domain units
    'SIGMA_RANGE': (1e-6, 1e3),
    # Least squares
    'RIDGE_CONDITION_TRIGGER': 1e12,
    'RIDGE_SCALE': 1e-10,
    'GRAM_JITTER': 1e-12,
    'STABILITY_THRESHOLD': 0.01,
    # Monte Carlo
    'MC_TRIALS': 200,
    'SEED': 42,
    # Sweeps
    'DEGENERATE_ERROR': 1e-14,
    'K_GRID': {2: (16, 4096), 3: (16, 1024)},
    'LS_K_GRID': (4, 256),
    'THREADS': _env_int('SPLATFIELD_THREADS', 1),
    # Point × primitive entries per block of basis evaluation
    'EVAL_BLOCK_ENTRIES': 1 << 21,
}


# =============================================================================
# Logging
# =============================================================================
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '[{asctime}] {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.environ.get('SPLATFIELD_LOG_LEVEL', 'WARNING'),
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}
