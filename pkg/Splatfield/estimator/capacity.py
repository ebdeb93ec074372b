"""
Capacity law for fixed-dictionary least squares, with every problem
constant set to 1:

    K*   = (N / σ²)^{d/(2s+d)} · ‖f‖^{2d/(2s+d)}
    risk = (σ² / N)^{2s/(2s+d)} · ‖f‖^{2d/(2s+d)}
"""
import math

from Splatfield.exceptions import ParameterError


def _check_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise ParameterError(f'{name} must be > 0, got {value}')


def round_half_up(value):
    return max(1, int(math.floor(value + 0.5)))


def optimal_k(N, sigma_noise, d, s, field_norm=1.0):
    """Returns (K*, K* rounded half-up and floored at 1)."""
    _check_positive(N=N, sigma_noise=sigma_noise, d=d, s=s, field_norm=field_norm)
    exponent = d / (2.0 * s + d)
    k_star = (N / sigma_noise ** 2) ** exponent * field_norm ** (2.0 * exponent)
    return k_star, round_half_up(k_star)


def optimal_risk(N, sigma_noise, d, s, field_norm=1.0):
    _check_positive(N=N, sigma_noise=sigma_noise, d=d, s=s, field_norm=field_norm)
    return (sigma_noise ** 2 / N) ** (2.0 * s / (2.0 * s + d)) * field_norm ** (2.0 * d / (2.0 * s + d))
