"""
Log-log rate fits, error ≈ C · K^p.
"""
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from Splatfield.exceptions import ParameterError, RateFitError, SizeError


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float

    @property
    def constant(self):
        return float(np.exp(self.intercept))


def rate_fit(Ks, errors):
    """Ordinary least squares of log(error) on log(K).

    Returns RateFit(exponent p, intercept log C, R²).
    """
    Ks = np.asarray(Ks, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if Ks.shape != errors.shape:
        raise ParameterError('Ks and errors differ in length')
    if len(Ks) < 3:
        raise SizeError(f'a rate fit needs at least 3 points, got {len(Ks)}')
    if np.any(np.diff(Ks) <= 0):
        raise ParameterError('Ks must be strictly increasing')
    if not np.all(errors > 0):
        raise RateFitError('errors must be > 0 for a log-log fit')

    x, y = np.log(Ks), np.log(errors)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    spread = np.sum((y - y.mean()) ** 2)
    r_squared = 1.0 if spread == 0 else 1.0 - np.sum(residual ** 2) / spread
    return RateFit(float(slope), float(intercept), float(r_squared))


def is_degenerate(errors):
    """True when any error is too small to take a logarithm of meaningfully."""
    return bool(np.any(np.asarray(errors, dtype=float) < settings.SPLATFIELD['DEGENERATE_ERROR']))
