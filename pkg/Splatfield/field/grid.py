"""
Cell-centered grid samples of fields: sampling, Gaussian smoothing,
roughness and spectral seminorms.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.ndimage import gaussian_filter

from Splatfield.exceptions import ParameterError, SizeError, UndefinedRatioError

logger = logging.getLogger(__name__)

# Smoothing kernel half-width in units of sigma_px
SMOOTHING_TRUNCATE = 4.0


@dataclass(frozen=True, eq=False)
class GridField:
    """C channels sampled at cell centers; values has shape (*resolution, C)."""

    domain: object
    resolution: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        resolution = tuple(int(n) for n in self.resolution)
        if values.shape[:-1] != resolution:
            raise ParameterError(
                f'values shape {values.shape} does not match resolution {resolution}'
            )
        if not np.all(np.isfinite(values)):
            raise ParameterError('grid values must be finite')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'resolution', resolution)

    @property
    def channels(self):
        return self.values.shape[-1]

    @property
    def spacing(self):
        return self.domain.lengths / np.asarray(self.resolution)

    @property
    def nodes(self):
        return self.domain.cell_centers(self.resolution)

    def flat(self):
        """Values as (n_cells, C) in the same order as nodes."""
        return self.values.reshape(-1, self.channels)

    def evaluate(self, points):
        """Multilinear interpolation between cell centers; exact at the centers."""
        interpolator = RegularGridInterpolator(
            self.domain.cell_axes(self.resolution), self.values,
            method='linear', bounds_error=False, fill_value=None,
        )
        return interpolator(np.atleast_2d(points))


def sample_grid(field, resolution):
    """Evaluate a field at the cell centers of a grid."""
    resolution = field.domain.resolve(resolution)
    if min(resolution) < 2:
        raise SizeError(f'grid resolution must be >= 2 per axis, got {resolution}')
    values = field.evaluate(field.domain.cell_centers(resolution))
    return GridField(field.domain, resolution, values.reshape(resolution + (-1,)))


def smooth_grid(grid, sigma_px):
    """Separable Gaussian convolution in pixel units, reflective boundaries.

    The kernel is truncated at 4·sigma_px; sigma_px = 0 returns the input.
    """
    if sigma_px < 0:
        raise ParameterError(f'sigma_px must be >= 0, got {sigma_px}')
    if sigma_px == 0:
        return grid
    sigma = (float(sigma_px),) * len(grid.resolution) + (0.0,)
    smoothed = gaussian_filter(
        grid.values, sigma=sigma, mode='reflect', truncate=SMOOTHING_TRUNCATE,
    )
    return GridField(grid.domain, grid.resolution, smoothed)


def roughness(grid):
    """Normalized gradient magnitude ‖∇f‖_rms / ‖f‖_rms.

    Gradients are central differences on interior cells; ‖f‖_rms is over all cells.
    """
    if min(grid.resolution) < 3:
        raise SizeError('roughness needs at least 3 cells per axis')
    d = len(grid.resolution)
    interior = (slice(1, -1),) * d
    grad_sq = np.zeros(tuple(n - 2 for n in grid.resolution) + (grid.channels,))
    for axis, step in enumerate(grid.spacing):
        upper = list(interior)
        lower = list(interior)
        upper[axis] = slice(2, None)
        lower[axis] = slice(None, -2)
        grad = (grid.values[tuple(upper)] - grid.values[tuple(lower)]) / (2.0 * step)
        grad_sq += grad ** 2
    f_sq = np.sum(grid.values ** 2, axis=-1)
    if not np.any(f_sq > 0):
        raise UndefinedRatioError('roughness of an identically zero field')
    return float(np.sqrt(np.mean(np.sum(grad_sq, axis=-1)) / np.mean(f_sq)))


def sobolev_seminorm(grid, s):
    """Discrete H^s seminorm squared, |Ω| Σ_k |f̂_k|² (2π|k|)^{2s}, via FFT.

    Treats the grid as one period of a periodic field.
    """
    d = len(grid.resolution)
    spectrum = np.fft.fftn(grid.values, axes=tuple(range(d))) / np.prod(grid.resolution)
    freqs = np.meshgrid(*[
        np.fft.fftfreq(n, d=1.0 / n) / length
        for n, length in zip(grid.resolution, grid.domain.lengths)
    ], indexing='ij')
    k_sq = sum(f ** 2 for f in freqs)
    weight = (4.0 * np.pi ** 2 * k_sq) ** s
    power = np.sum(np.abs(spectrum) ** 2, axis=-1)
    return float(np.sum(weight * power) * grid.domain.volume)
