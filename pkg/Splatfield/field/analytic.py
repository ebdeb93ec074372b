"""
Analytic ground-truth fields.

Each constructor returns an immutable AnalyticField whose evaluation rule is
closed form; the declared smoothness only feeds theory predictions.
"""
import itertools
import logging
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from Splatfield import rng
from Splatfield.exceptions import DimensionError, ParameterError
from .domain import Domain

logger = logging.getLogger(__name__)

TAYLOR_GREEN = 'taylor-green'
LAMB_OSEEN = 'lamb-oseen'
FOURIER_RANDOM = 'fourier-random'
CONSTANT = 'constant'
AFFINE = 'affine'

KINDS = (TAYLOR_GREEN, LAMB_OSEEN, FOURIER_RANDOM, CONSTANT, AFFINE)

# Decay exponent margin ε in |k|^-(s + d/2 + ε)
FOURIER_MARGIN = 0.5

# Query points per vectorized block
EVALUATION_BLOCK = 2048


@dataclass(frozen=True, eq=False)
class AnalyticField:
    """A queryable field on a box domain with a declared smoothness class."""

    domain: Domain
    channels: int
    kind: str
    smoothness: float
    rule: object = dataclass_field(repr=False)
    params: dict = dataclass_field(default_factory=dict)

    def evaluate(self, points):
        """Values at points, shape (n, channels)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.domain.dimension:
            raise DimensionError(
                f'points have dimension {points.shape[1]}, domain has {self.domain.dimension}'
            )
        return self.rule(points)

    def __call__(self, points):
        return self.evaluate(points)

    def coefficient_seminorm(self, s):
        """Coefficient-space H^s seminorm squared, Σ c_k² (2π|k|)^{2s} / 2 · |Ω|.

        Only defined for Fourier fields.
        """
        if self.kind != FOURIER_RANDOM:
            raise ParameterError(f'coefficient seminorm needs a Fourier field, got {self.kind}')
        k_norm = np.linalg.norm(self.params['wavevectors'], axis=1)
        amplitudes = self.params['amplitudes']
        weights = (2.0 * np.pi * k_norm) ** (2.0 * s)
        return float(np.sum(amplitudes ** 2 * weights[None, :]) / 2.0 * self.domain.volume)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


# =============================================================================
# CONSTRUCTORS
# =============================================================================

def make_taylor_green(domain):
    """u = sin 2πx cos 2πy, v = −cos 2πx sin 2πy, p = ¼(cos 4πx + cos 4πy)."""
    if domain.dimension != 2:
        raise DimensionError(f'taylor-green needs a 2D domain, got d={domain.dimension}')

    def rule(points):
        x, y = points[:, 0], points[:, 1]
        u = np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y)
        v = -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y)
        p = 0.25 * (np.cos(4 * np.pi * x) + np.cos(4 * np.pi * y))
        return np.stack([u, v, p], axis=1)

    return AnalyticField(domain, 3, TAYLOR_GREEN, 4.0, rule)


def make_lamb_oseen(domain, core_radius, center=None):
    """Vorticity ω(r) = exp(−r²/a²) / (π a²) around center."""
    if domain.dimension != 2:
        raise DimensionError(f'lamb-oseen needs a 2D domain, got d={domain.dimension}')
    if core_radius <= 0:
        raise ParameterError(f'core_radius must be positive, got {core_radius}')
    a = float(core_radius)
    center = _frozen(domain.centroid if center is None else center)
    peak = 1.0 / (np.pi * a * a)

    def rule(points):
        r2 = np.sum((points - center) ** 2, axis=1)
        return (peak * np.exp(-r2 / (a * a)))[:, None]

    return AnalyticField(
        domain, 1, LAMB_OSEEN, 4.0, rule,
        params={'core_radius': a, 'center': center},
    )


def fourier_field(domain, wavevectors, amplitudes, phases, smoothness):
    """f_c(x) = Σ_k c_{c,k} cos(2π k·x + φ_{c,k}) with explicit coefficients.

    amplitudes and phases have shape (channels, modes).
    """
    wavevectors = _frozen(np.atleast_2d(wavevectors))
    amplitudes = _frozen(np.atleast_2d(amplitudes))
    phases = _frozen(np.atleast_2d(phases))
    if wavevectors.shape[1] != domain.dimension:
        raise DimensionError('wavevectors do not match the domain dimension')
    if amplitudes.shape != phases.shape or amplitudes.shape[1] != len(wavevectors):
        raise ParameterError('amplitudes and phases must be (channels, modes)')

    def rule(points):
        out = np.empty((len(points), len(amplitudes)))
        for start in range(0, len(points), EVALUATION_BLOCK):
            block = points[start:start + EVALUATION_BLOCK]
            angle = 2.0 * np.pi * block @ wavevectors.T
            for c in range(len(amplitudes)):
                out[start:start + EVALUATION_BLOCK, c] = np.cos(angle + phases[c]) @ amplitudes[c]
        return out

    return AnalyticField(
        domain, len(amplitudes), FOURIER_RANDOM, float(smoothness), rule,
        params={'wavevectors': wavevectors, 'amplitudes': amplitudes, 'phases': phases},
    )


def half_lattice(d, modes):
    """Nonzero k with |k|_∞ ≤ modes, one representative of each ±k pair."""
    ks = [
        k for k in itertools.product(range(-modes, modes + 1), repeat=d)
        if any(k) and next(v for v in k if v != 0) > 0
    ]
    return np.array(ks, dtype=float)


def make_fourier_random(domain, s, modes, seed, channels=1):
    """Random Fourier field with amplitude std |k|^-(s + d/2 + 0.5).

    cos(2πk·x + φ) and cos(−2πk·x − φ) are the same mode, so only one of each
    ±k pair is drawn. Channel c draws from its own sub-stream of seed.
    """
    if s <= 0:
        raise ParameterError(f'smoothness s must be positive, got {s}')
    if modes < 1:
        raise ParameterError(f'modes must be >= 1, got {modes}')
    d = domain.dimension
    ks = half_lattice(d, int(modes))
    std = np.linalg.norm(ks, axis=1) ** -(s + d / 2.0 + FOURIER_MARGIN)
    amplitudes, phases = [], []
    for c in range(channels):
        gen = rng.stream(seed, 'fourier', c)
        amplitudes.append(std * gen.standard_normal(len(ks)))
        phases.append(gen.uniform(0.0, 2.0 * np.pi, len(ks)))
    logger.debug(f'fourier-random field: s={s}, modes={modes}, seed={seed}, {len(ks)} wavevectors')
    built = fourier_field(domain, ks, amplitudes, phases, s)
    built.params.update({'modes': int(modes), 'seed': int(seed)})
    return built


def make_constant(domain, value, channels=1):
    value = float(value)

    def rule(points):
        return np.full((len(points), channels), value)

    return AnalyticField(domain, channels, CONSTANT, np.inf, rule, params={'value': value})


def make_affine(domain, gradient, offset=0.0):
    """f(x) = g·x + offset, single channel."""
    gradient = _frozen(gradient)
    if len(gradient) != domain.dimension:
        raise DimensionError('gradient does not match the domain dimension')
    offset = float(offset)

    def rule(points):
        return (points @ gradient + offset)[:, None]

    return AnalyticField(domain, 1, AFFINE, np.inf, rule, params={'gradient': gradient})


def make_field(kind, domain, s=1.0, modes=16, seed=42, core_radius=0.05, center=None, channels=1):
    """Dispatch on the kind tag (used by the CLI)."""
    if kind == TAYLOR_GREEN:
        return make_taylor_green(domain)
    if kind == LAMB_OSEEN:
        return make_lamb_oseen(domain, core_radius, center)
    if kind == FOURIER_RANDOM:
        return make_fourier_random(domain, s, modes, seed, channels)
    raise ParameterError(f'unknown field kind {kind!r}')
