"""
Gaussian primitives and the Shepard partition-of-unity scaffold.

    φ_k(x)  = exp(−½ (x − μ_k)ᵀ Σ_k⁻¹ (x − μ_k)),  Σ_k⁻¹ = R_θᵀ diag(σ_k⁻²) R_θ
    m(x)    = Σ_k w_k φ_k(x)
    ψ_k(x)  = w_k φ_k(x) / (m(x) + floor)
    f(x)    = Σ_k ψ_k(x) a_k

In d = 2, R_θ = [[cos θ, −sin θ], [sin θ, cos θ]] acts on x − μ_k before
the axis scales. In d = 3 the rotation is the identity.

Every primitive is summed at every query; there is no spatial culling.
"""
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from Splatfield.exceptions import DegenerateSupportError, DimensionError, ParameterError
from field.quadrature import midpoint_rule

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PrimitiveSet:
    domain: object
    mu: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray
    w: np.ndarray
    a: np.ndarray
    metadata: dict = None

    def __post_init__(self):
        d = self.domain.dimension
        mu = _frozen(np.atleast_2d(self.mu))
        K = len(mu)
        if K < 1:
            raise ParameterError('a primitive set needs at least one primitive')
        if mu.shape[1] != d:
            raise DimensionError(f'centers are {mu.shape[1]}-dimensional, domain is {d}-dimensional')
        sigma = np.asarray(self.sigma, dtype=float)
        if sigma.ndim == 1:
            sigma = sigma[:, None]
        try:
            sigma = _frozen(np.broadcast_to(sigma, (K, d)))
            theta = _frozen(np.broadcast_to(np.asarray(self.theta, dtype=float), (K,)))
            w = _frozen(np.broadcast_to(np.asarray(self.w, dtype=float), (K,)))
        except ValueError as exc:
            raise ParameterError(f'per-primitive arrays do not match K={K}: {exc}') from exc
        a = np.asarray(self.a, dtype=float)
        if a.ndim == 0:
            a = np.full(K, float(a))
        a = _frozen(a.reshape(K, -1) if a.ndim < 2 else a)
        if a.shape[0] != K:
            raise ParameterError(f'expected {K} amplitude rows, got {a.shape[0]}')

        sigma_min, sigma_max = settings.SPLATFIELD['SIGMA_RANGE']
        if not np.all((sigma >= sigma_min) & (sigma <= sigma_max)):
            raise ParameterError(f'axis scales must lie in [{sigma_min}, {sigma_max}]')
        if not np.all((w > 0.0) & (w < 1.0)):
            raise ParameterError('weights must lie in (0, 1)')
        if d == 3 and np.any(theta != 0.0):
            raise DimensionError('rotations are only supported in two dimensions')
        for name, array in (('mu', mu), ('theta', theta), ('a', a)):
            if not np.all(np.isfinite(array)):
                raise ParameterError(f'{name} must be finite')

        for name, array in (('mu', mu), ('sigma', sigma), ('theta', theta), ('w', w), ('a', a)):
            object.__setattr__(self, name, array)
        object.__setattr__(self, 'metadata', dict(self.metadata or {}))

    @property
    def size(self):
        return len(self.mu)

    @property
    def dimension(self):
        return self.mu.shape[1]

    @property
    def channels(self):
        return self.a.shape[1]

    def with_amplitudes(self, a):
        return PrimitiveSet(self.domain, self.mu, self.sigma, self.theta, self.w, a, self.metadata)

    def evaluate(self, points):
        """Scaffold values, so a PrimitiveSet is field-evaluable."""
        return eval_scaffold(self, points).values


@dataclass(frozen=True, eq=False)
class ScaffoldEval:
    """Scaffold values (n, C) and basis mass (n,) for a batch of queries."""

    values: np.ndarray
    mass: np.ndarray

    def __len__(self):
        return len(self.mass)


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def _blocks(n, K):
    rows = max(1, settings.SPLATFIELD['EVAL_BLOCK_ENTRIES'] // K)
    for start in range(0, n, rows):
        yield slice(start, min(start + rows, n))


def _as_points(ps, x):
    points = np.atleast_2d(np.asarray(x, dtype=float))
    if points.shape[1] != ps.dimension:
        raise DimensionError(f'query points are {points.shape[1]}-dimensional, primitives are {ps.dimension}-dimensional')
    return points


def _quadratic_form(ps, points):
    """(x − μ_k)ᵀ Σ_k⁻¹ (x − μ_k) for every point/primitive pair, shape (n, K)."""
    diff = points[:, None, :] - ps.mu[None, :, :]
    if ps.dimension == 2:
        cos, sin = np.cos(ps.theta), np.sin(ps.theta)
        y1 = cos * diff[..., 0] - sin * diff[..., 1]
        y2 = sin * diff[..., 0] + cos * diff[..., 1]
        return (y1 / ps.sigma[:, 0]) ** 2 + (y2 / ps.sigma[:, 1]) ** 2
    return np.sum((diff / ps.sigma) ** 2, axis=-1)


def basis_matrix(ps, points):
    """φ_k at every query point, shape (n, K), evaluated block by block."""
    points = _as_points(ps, points)
    out = np.empty((len(points), ps.size))
    for rows in _blocks(len(points), ps.size):
        out[rows] = np.exp(-0.5 * _quadratic_form(ps, points[rows]))
    return out


def basis_eval(ps, x):
    """φ_k(x); a single point gives shape (K,), a point list (n, K)."""
    phi = basis_matrix(ps, x)
    return phi[0] if np.ndim(x) == 1 else phi


def _normalize(ps, phi, points):
    """Shepard weights for one block of basis values, and the unfloored mass."""
    weighted = phi * ps.w
    mass = weighted.sum(axis=1)
    threshold = settings.SPLATFIELD['SUPPORT_THRESHOLD']
    if np.any(mass < threshold):
        bad = int(np.argmax(mass < threshold))
        raise DegenerateSupportError(points[bad], mass[bad])
    psi = weighted / (mass + settings.SPLATFIELD['DENOMINATOR_FLOOR'])[:, None]
    return psi, mass


def shepard_matrix(ps, points):
    """ψ_k at every query point, shape (n, K)."""
    points = _as_points(ps, points)
    out = np.empty((len(points), ps.size))
    for rows in _blocks(len(points), ps.size):
        out[rows], _ = _normalize(ps, basis_matrix(ps, points[rows]), points[rows])
    return out


def shepard_weights(ps, x):
    psi = shepard_matrix(ps, x)
    return psi[0] if np.ndim(x) == 1 else psi


def basis_mass(ps, points):
    """m(x) = Σ_k w_k φ_k(x), without the support check."""
    points = _as_points(ps, points)
    mass = np.empty(len(points))
    for rows in _blocks(len(points), ps.size):
        mass[rows] = basis_matrix(ps, points[rows]) @ ps.w
    return mass


def eval_scaffold(ps, queries):
    points = _as_points(ps, queries)
    values = np.empty((len(points), ps.channels))
    mass = np.empty(len(points))
    for rows in _blocks(len(points), ps.size):
        psi, mass[rows] = _normalize(ps, basis_matrix(ps, points[rows]), points[rows])
        values[rows] = psi @ ps.a
    return ScaffoldEval(values, mass)


def moment_sum(ps, x, m):
    """Σ_k ψ_k(x) ‖x − μ_k‖^m; a float for one point, an array for a list."""
    if m < 0:
        raise ParameterError(f'moment order must be >= 0, got {m}')
    points = _as_points(ps, x)
    out = np.empty(len(points))
    for rows in _blocks(len(points), ps.size):
        block = points[rows]
        psi, _ = _normalize(ps, basis_matrix(ps, block), block)
        if m == 0:
            out[rows] = psi.sum(axis=1)
            continue
        distance = np.linalg.norm(block[:, None, :] - ps.mu[None, :, :], axis=-1)
        out[rows] = np.sum(psi * distance ** m, axis=1)
    return float(out[0]) if np.ndim(x) == 1 else out


def oracle_scaffold(field, cs, scale_factor=None, weight=None, rule=None):
    """Shepard scaffold with a_k = f(μ_k) and isotropic σ_k = c_σ · h_K.

    The basis mass is checked over the default quadrature (or the given rule)
    so a scaffold that cannot be normalized fails here, not mid-sweep.
    """
    config = settings.SPLATFIELD
    scale_factor = config['ORACLE_SCALE_FACTOR'] if scale_factor is None else float(scale_factor)
    weight = config['ORACLE_WEIGHT'] if weight is None else float(weight)
    if scale_factor <= 0:
        raise ParameterError(f'scale factor must be > 0, got {scale_factor}')

    sigma = scale_factor * cs.fill_distance
    amplitudes = np.asarray(field.evaluate(cs.centers), dtype=float)
    ps = PrimitiveSet(
        cs.domain, cs.centers, np.full(cs.size, sigma), np.zeros(cs.size), np.full(cs.size, weight),
        amplitudes,
        metadata={'scale_factor': scale_factor, 'fill_distance': cs.fill_distance, 'weight': weight},
    )

    rule = rule or midpoint_rule(cs.domain)
    mass = basis_mass(ps, rule.nodes)
    if mass.min() < config['SUPPORT_THRESHOLD']:
        bad = int(np.argmin(mass))
        raise DegenerateSupportError(rule.nodes[bad], mass[bad])
    logger.debug(f'Oracle scaffold K={cs.size} sigma={sigma:.4g} min mass={mass.min():.3e}')
    return ps
