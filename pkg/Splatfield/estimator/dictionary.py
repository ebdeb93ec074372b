"""
Fixed Gaussian dictionaries V_K = span{φ_k} and their matrices.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from field.metrics import values_at
from primitives.scaffold import PrimitiveSet, basis_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Centers, axis scales and rotations of K unnormalized Gaussians."""

    domain: object
    mu: np.ndarray
    sigma: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        # PrimitiveSet does the shape and range checks
        checked = PrimitiveSet(self.domain, self.mu, self.sigma, self.theta, 0.5, 0.0)
        for name in ('mu', 'sigma', 'theta'):
            object.__setattr__(self, name, getattr(checked, name))

    @classmethod
    def from_primitives(cls, ps):
        return cls(ps.domain, ps.mu, ps.sigma, ps.theta)

    @classmethod
    def from_centers(cls, cs, scale_factor=1.0):
        """Isotropic σ = c_σ · h_K at every center."""
        return cls(cs.domain, cs.centers, np.full(cs.size, scale_factor * cs.fill_distance), 0.0)

    @property
    def size(self):
        return len(self.mu)

    @property
    def dimension(self):
        return self.mu.shape[1]

    def basis(self, points):
        return basis_matrix(self, points)


@dataclass(frozen=True, eq=False)
class GaussianExpansion:
    """Σ_k c_k φ_k with coefficients of shape (K, C); field-evaluable."""

    dictionary: Dictionary
    coefficients: np.ndarray

    @property
    def domain(self):
        return self.dictionary.domain

    @property
    def channels(self):
        return self.coefficients.shape[1]

    def evaluate(self, points):
        return self.dictionary.basis(points) @ self.coefficients


def _node_blocks(rule, K):
    rows = max(1, settings.SPLATFIELD['EVAL_BLOCK_ENTRIES'] // K)
    for start in range(0, rule.size, rows):
        yield slice(start, min(start + rows, rule.size))


def design_matrix(dictionary, obs):
    """A_ij = φ_j(x_i) at the sensor locations, shape (N, K)."""
    locations = getattr(obs, 'locations', obs)
    return dictionary.basis(locations)


def gram_matrix(dictionary, rule):
    """G_jl = ∫_Ω φ_j φ_l under the quadrature rule, exactly symmetric."""
    K = dictionary.size
    gram = np.zeros((K, K))
    for rows in _node_blocks(rule, K):
        B = dictionary.basis(rule.nodes[rows])
        gram += (B * rule.weights[rows, None]).T @ B
    return 0.5 * (gram + gram.T)


def load_vector(field, dictionary, rule):
    """b_j = ∫_Ω f φ_j under the quadrature rule, shape (K, C)."""
    values = values_at(field, rule)
    b = np.zeros((dictionary.size, values.shape[1]))
    for rows in _node_blocks(rule, dictionary.size):
        B = dictionary.basis(rule.nodes[rows])
        b += B.T @ (values[rows] * rule.weights[rows, None])
    return b


def residual_norm_sq(field, expansion, rule):
    """‖f − Σ c_k φ_k‖² per channel, integrated block by block."""
    values = values_at(field, rule)
    total = np.zeros(values.shape[1])
    for rows in _node_blocks(rule, expansion.dictionary.size):
        diff = values[rows] - expansion.evaluate(rule.nodes[rows])
        total += rule.weights[rows] @ diff ** 2
    return total


def gaussian_overlap(sigma, distance, d):
    """∫_{ℝ^d} φ_j φ_l for isotropic σ and centers `distance` apart."""
    return (math.pi * sigma * sigma) ** (d / 2.0) * math.exp(-distance ** 2 / (4.0 * sigma * sigma))
