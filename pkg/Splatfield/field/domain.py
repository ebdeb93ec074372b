"""
Axis-aligned box domains and their cell-centered lattices.
"""
from dataclasses import dataclass

import numpy as np

from Splatfield.exceptions import DimensionError, ParameterError


@dataclass(frozen=True)
class Domain:
    """Box Ω = [lower, upper] in d = 2 or 3 dimensionless coordinates."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) != len(upper):
            raise ParameterError('lower and upper corners differ in dimension')
        if len(lower) not in (2, 3):
            raise DimensionError(f'dimension must be 2 or 3, got {len(lower)}')
        if not all(lo < hi for lo, hi in zip(lower, upper)):
            raise ParameterError(f'lower {lower} must be < upper {upper} componentwise')
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, d=2):
        return cls((0.0,) * d, (1.0,) * d)

    @property
    def dimension(self):
        return len(self.lower)

    @property
    def lengths(self):
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    @property
    def centroid(self):
        return 0.5 * (np.asarray(self.lower) + np.asarray(self.upper))

    def resolve(self, resolution):
        """Expand a scalar resolution to one count per axis."""
        if np.isscalar(resolution):
            resolution = (int(resolution),) * self.dimension
        resolution = tuple(int(n) for n in resolution)
        if len(resolution) != self.dimension:
            raise ParameterError(f'need {self.dimension} resolutions, got {len(resolution)}')
        return resolution

    def cell_axes(self, resolution):
        """Per-axis cell-center coordinates."""
        resolution = self.resolve(resolution)
        return [
            lo + (np.arange(n) + 0.5) * (hi - lo) / n
            for lo, hi, n in zip(self.lower, self.upper, resolution)
        ]

    def cell_centers(self, resolution):
        """All cell centers, shape (prod(resolution), d), row-major (axis 0 slowest)."""
        mesh = np.meshgrid(*self.cell_axes(resolution), indexing='ij')
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, points, strict=False):
        points = np.atleast_2d(points)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if strict:
            return np.all((points > lo) & (points < hi), axis=1)
        return np.all((points >= lo) & (points <= hi), axis=1)

    def boundary_cells(self, resolution):
        """Indices (into cell_centers) of the outermost ring of cells."""
        resolution = self.resolve(resolution)
        index = np.indices(resolution).reshape(self.dimension, -1).T
        on_edge = np.any((index == 0) | (index == np.asarray(resolution) - 1), axis=1)
        return np.flatnonzero(on_edge)
