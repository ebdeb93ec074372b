"""
Midpoint tensor quadrature on box domains.

The nodes coincide with GridField cell centers so grid-based and analytic
error paths integrate over the same points.
"""
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from Splatfield.exceptions import SizeError
from .domain import Domain


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    domain: Domain
    resolution: tuple
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        """Σ_q w_q v_q along the node axis."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def midpoint_rule(domain, resolution=None):
    """Uniform-weight midpoint rule; weights sum to |Ω|."""
    if resolution is None:
        resolution = default_resolution(domain)
    resolution = domain.resolve(resolution)
    if min(resolution) < 1:
        raise SizeError(f'quadrature needs at least one node per axis, got {resolution}')
    nodes = domain.cell_centers(resolution)
    weights = np.full(len(nodes), domain.volume / len(nodes))
    return QuadratureRule(domain, resolution, nodes, weights)


def default_resolution(domain):
    return settings.SPLATFIELD['QUADRATURE_NODES'][domain.dimension]
