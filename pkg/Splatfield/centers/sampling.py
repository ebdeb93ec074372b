"""
Quasi-uniform primitive centers and their geometry.

h_K (fill distance) is the largest distance from the domain to its nearest
center, q_K (separation radius) half the smallest pairwise distance, and
ρ = h_K / q_K the quasi-uniformity ratio.
"""
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from Splatfield.exceptions import DegeneracyError, ParameterError, SizeError
from field.quadrature import midpoint_rule

logger = logging.getLogger(__name__)

# Relative tolerance under which squared distances count as tied
TIE_TOLERANCE = 1e-12
MIN_PROBE_NODES = 32


@dataclass(frozen=True, eq=False)
class CenterSet:
    domain: object
    centers: np.ndarray
    fill_distance: float
    separation: float
    indices: np.ndarray = None

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float)
        centers.setflags(write=False)
        object.__setattr__(self, 'centers', centers)

    @property
    def size(self):
        return len(self.centers)

    @property
    def ratio(self):
        """ρ = h/q; zero for a single center."""
        if math.isinf(self.separation):
            return 0.0
        return self.fill_distance / self.separation

    def prefix(self, K, probe=None):
        """The first K centers with their own h and q (nested FPS prefixes)."""
        if not 1 <= K <= self.size:
            raise SizeError(f'prefix size {K} outside 1..{self.size}')
        indices = None if self.indices is None else self.indices[:K]
        return build_center_set(self.domain, self.centers[:K], probe=probe, indices=indices)

    def to_csv(self, path):
        d = self.centers.shape[1]
        with open(path, 'w', newline='\n', encoding='utf-8') as handle:
            handle.write(f'# h={self.fill_distance!r}\n')
            handle.write(f'# q={self.separation!r}\n')
            handle.write(f'# rho={self.ratio!r}\n')
            writer = csv.writer(handle, lineterminator='\n')
            writer.writerow([f'x{i + 1}' for i in range(d)])
            for row in self.centers:
                writer.writerow(['%.17g' % v for v in row])


def build_center_set(domain, centers, probe=None, indices=None, fill=None):
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if not np.all(domain.contains(centers, strict=True)):
        raise ParameterError('centers must lie strictly inside the domain')
    draft = CenterSet(domain, centers, 0.0, math.inf, indices)
    h = fill if fill is not None else fill_distance(draft, probe)
    q = separation_radius(draft) if len(centers) >= 2 else math.inf
    return CenterSet(domain, centers, h, q, indices)


# =============================================================================
# GENERATORS
# =============================================================================

def _lowest_within(values, target, tolerance):
    """Lowest index whose value is within relative tolerance of target."""
    return int(np.flatnonzero(np.abs(values - target) <= tolerance * max(abs(target), 1e-300))[0])


def farthest_point_order(candidates, K, start_point):
    """Greedy FPS indices; first index is the candidate nearest start_point.

    Ties (within TIE_TOLERANCE) go to the lowest index, so the order is
    deterministic and every prefix is itself an FPS run.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if K < 1:
        raise SizeError(f'K must be >= 1, got {K}')
    if K > len(candidates):
        raise SizeError(f'K={K} exceeds {len(candidates)} candidates')
    start_sq = np.sum((candidates - start_point) ** 2, axis=1)
    order = [_lowest_within(start_sq, start_sq.min(), TIE_TOLERANCE)]
    min_sq = np.sum((candidates - candidates[order[0]]) ** 2, axis=1)
    for _ in range(K - 1):
        farthest = min_sq.max()
        if farthest <= 0.0:
            raise DegeneracyError('candidates are not pairwise distinct')
        pick = _lowest_within(min_sq, farthest, TIE_TOLERANCE)
        order.append(pick)
        np.minimum(min_sq, np.sum((candidates - candidates[pick]) ** 2, axis=1), out=min_sq)
    return np.array(order, dtype=int)


def farthest_point_sample(candidates, K, domain, start_rule='centroid', probe=None):
    """Nested farthest-point centers drawn from a candidate list."""
    if start_rule == 'centroid':
        start_point = domain.centroid
    else:
        start_point = np.asarray(candidates, dtype=float)[int(start_rule)]
    order = farthest_point_order(candidates, K, start_point)
    centers = np.asarray(candidates, dtype=float)[order]
    logger.debug(f'FPS picked {K} of {len(candidates)} candidates')
    return build_center_set(domain, centers, probe=probe, indices=order)


def _ceil_root(m, r):
    """Smallest n with n**r >= m."""
    n = max(1, int(round(m ** (1.0 / r))))
    while n ** r < m:
        n += 1
    while n > 1 and (n - 1) ** r >= m:
        n -= 1
    return n


def lattice_shape(K, d):
    """Most-square n_1 × … × n_d with product >= K."""
    shape = []
    remaining = K
    for axis in range(d):
        n = _ceil_root(remaining, d - axis)
        shape.append(n)
        remaining = -(-remaining // n)
    return tuple(shape)


def grid_centers(domain, K, probe=None):
    """Cell centers of the most-square lattice, first axis fastest, truncated to K."""
    if K < 1:
        raise SizeError(f'K must be >= 1, got {K}')
    d = domain.dimension
    shape = lattice_shape(K, d)
    index = np.indices(shape[::-1]).reshape(d, -1)[::-1].T[:K]
    step = domain.lengths / np.asarray(shape)
    centers = np.asarray(domain.lower) + (index + 0.5) * step
    fill = None
    if int(np.prod(shape)) == K:
        fill = 0.5 * float(np.sqrt(np.sum(step ** 2)))
    return build_center_set(domain, centers, probe=probe, fill=fill)


# =============================================================================
# GEOMETRY
# =============================================================================

def fill_distance(cs, probe=None):
    """max over probe nodes of the distance to the nearest center."""
    if cs.size == 0:
        raise SizeError('fill distance of an empty center set')
    if probe is None:
        probe = midpoint_rule(cs.domain)
    if min(probe.resolution) < MIN_PROBE_NODES:
        raise SizeError(f'probe needs >= {MIN_PROBE_NODES} nodes per axis, got {probe.resolution}')
    distance, _ = cKDTree(cs.centers).query(probe.nodes)
    return float(distance.max())


def separation_radius(cs):
    """q_K = ½ min_{i≠j} ‖μ_i − μ_j‖, exact."""
    if cs.size < 2:
        raise SizeError('separation radius needs at least two centers')
    distance, _ = cKDTree(cs.centers).query(cs.centers, k=2)
    nearest = float(distance[:, 1].min())
    if nearest <= 0.0:
        raise DegeneracyError('duplicate centers')
    return 0.5 * nearest
