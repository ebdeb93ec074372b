"""
K-sweeps: the Shepard oracle, best L² projection, least-squares
bias–variance and the capacity table.

Rows are independent and run on a thread pool; each row only depends on
(config, K), so row values never depend on the thread count and rows are
always returned in increasing K.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from Splatfield import rng
from Splatfield.exceptions import ParameterError, SizeError
from centers.sampling import farthest_point_order, farthest_point_sample
from estimator.capacity import optimal_k, optimal_risk
from estimator.dictionary import Dictionary, design_matrix, gram_matrix, residual_norm_sq
from estimator.fitting import bias_variance_mc, fit_least_squares, project_l2
from estimator.serializers import LeastSquaresFitSerializer, render
from field import container
from field.grid import sample_grid, smooth_grid
from field.metrics import l2_norm, rel_l2_error
from field.quadrature import midpoint_rule
from primitives.scaffold import oracle_scaffold
from .rates import is_degenerate, rate_fit
from .results import (
    BAND_COLUMNS, LS_COLUMNS, ORACLE_COLUMNS, PROJECTION_COLUMNS, SweepResult,
)

logger = logging.getLogger(__name__)


def power_of_two_grid(kmin, kmax):
    """kmin, 2·kmin, … up to kmax."""
    if kmin < 1 or kmax < kmin:
        raise ParameterError(f'need 1 <= kmin <= kmax, got kmin={kmin}, kmax={kmax}')
    Ks = []
    K = int(kmin)
    while K <= kmax:
        Ks.append(K)
        K *= 2
    return Ks


def default_k_grid(d):
    return power_of_two_grid(*settings.SPLATFIELD['K_GRID'][d])


def _check_ks(Ks):
    Ks = sorted(set(int(K) for K in Ks))
    if not Ks:
        raise SizeError('the K list is empty')
    if Ks[0] < 1:
        raise ParameterError(f'every K must be >= 1, got {Ks[0]}')
    return Ks


def run_rows(row, Ks, threads=None):
    """row(K) for every K, on up to `threads` workers, in K order."""
    threads = settings.SPLATFIELD['THREADS'] if threads is None else threads
    threads = max(1, min(int(threads), len(Ks)))
    if threads == 1:
        return [row(K) for K in Ks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(row, Ks))


def nested_centers(rule, K_max):
    """FPS over the quadrature nodes; every sweep row takes a prefix."""
    return farthest_point_sample(rule.nodes, K_max, rule.domain, probe=rule)


def _fit(Ks, errors):
    if len(Ks) < 3:
        return None, False
    if is_degenerate(errors):
        logger.info('Rate fit skipped: degenerate errors')
        return None, True
    return rate_fit(Ks, errors), False


# =============================================================================
# ORACLE
# =============================================================================

def oracle_sweep(field, Ks, scale_factor=None, smooth_px=0.0, rule=None, threads=None, config=None, weight=None):
    """Relative L² error of the Shepard oracle on nested FPS centers.

    With smooth_px > 0 the smoothed grid is the ground truth for both the
    amplitudes and the error.

    FPS over the quadrature nodes gives near-lattice prefixes. At c_σ = 1 their
    first moments cancel away from the boundary, so a smooth field converges
    faster than first order; c_σ ≈ 0.3 shows the K^(-1/d) saturation.
    """
    Ks = _check_ks(Ks)
    rule = rule or midpoint_rule(field.domain)
    truth = field
    if smooth_px > 0:
        truth = smooth_grid(sample_grid(field, rule.resolution), smooth_px)
    full = nested_centers(rule, Ks[-1])

    def row(K):
        cs = full.prefix(K, probe=rule)
        ps = oracle_scaffold(truth, cs, scale_factor, weight, rule=rule)
        error = rel_l2_error(truth, ps, rule)
        logger.info(f'oracle K={K} h={cs.fill_distance:.4g} rel_l2={error:.4e}')
        return {
            'K': K, 'h': cs.fill_distance, 'q': cs.separation, 'rho': cs.ratio,
            'smooth_px': float(smooth_px), 'rel_l2': error,
        }

    rows = run_rows(row, Ks, threads)
    fit, degenerate = _fit(Ks, [r['rel_l2'] for r in rows])
    return SweepResult('oracle', ORACLE_COLUMNS, rows, 'rel_l2', fit, degenerate, dict(config or {}))


def seed_band(results):
    """Mean ± std of the error column over sweeps that share their K grid."""
    if not results:
        raise SizeError('no sweeps to aggregate')
    Ks = results[0].Ks
    for result in results[1:]:
        if not np.array_equal(result.Ks, Ks):
            raise ParameterError('seed bands need identical K grids')
    errors = np.array([result.column(result.error_column) for result in results])
    fills = np.array([result.column('h') for result in results])
    ddof = 1 if len(results) > 1 else 0
    rows = [
        {
            'K': int(K), 'h': float(fills[:, i].mean()), 'mean': float(errors[:, i].mean()),
            'std': float(errors[:, i].std(ddof=ddof)), 'seeds': len(results),
        }
        for i, K in enumerate(Ks)
    ]
    fit, degenerate = _fit(list(Ks), [r['mean'] for r in rows])
    summary = {}
    exponents = [r.fit.exponent for r in results if r.fit is not None]
    if len(exponents) == len(results):
        summary = {'exponent_mean': float(np.mean(exponents)), 'exponent_std': float(np.std(exponents, ddof=ddof))}
    return SweepResult(
        f'{results[0].tag}-band', BAND_COLUMNS, rows, 'mean', fit, degenerate,
        dict(results[0].config), summary,
    )


# =============================================================================
# PROJECTION
# =============================================================================

def projection_sweep(field, Ks, scale_factor=1.0, rule=None, threads=None, config=None):
    """Best L² approximation error from fixed-center unnormalized dictionaries.

    With σ = c_σ·h_K at fixed c_σ the dictionary is a scaled stationary Gaussian
    space, which saturates: the error levels off once h_K is small against the
    field scale and can rise again as G loses conditioning. The fitted exponent
    describes the sweep, it is not an approximation rate.
    """
    Ks = _check_ks(Ks)
    rule = rule or midpoint_rule(field.domain)
    full = nested_centers(rule, Ks[-1])
    norm = l2_norm(field, rule)

    def row(K):
        cs = full.prefix(K, probe=rule)
        dictionary = Dictionary.from_centers(cs, scale_factor)
        G = gram_matrix(dictionary, rule)
        _, approx = project_l2(field, dictionary, G, rule)
        error = float(np.sqrt(residual_norm_sq(field, approx, rule).sum()) / norm)
        logger.info(f'projection K={K} rel_l2={error:.4e}')
        return {'K': K, 'h': cs.fill_distance, 'cond_G': float(np.linalg.cond(G)), 'rel_l2': error}

    rows = run_rows(row, Ks, threads)
    fit, degenerate = _fit(Ks, [r['rel_l2'] for r in rows])
    return SweepResult('projection', PROJECTION_COLUMNS, rows, 'rel_l2', fit, degenerate, dict(config or {}))


# =============================================================================
# LEAST SQUARES
# =============================================================================

def sensor_locations(rule, N, boundary=False):
    """N FPS-ordered sensors from the quadrature nodes, or from the outer cell ring."""
    candidates = rule.nodes
    if boundary:
        candidates = candidates[rule.domain.boundary_cells(rule.resolution)]
    if N > len(candidates):
        raise SizeError(f'N={N} exceeds {len(candidates)} candidate sensor sites')
    return candidates[farthest_point_order(candidates, N, rule.domain.centroid)]


def ls_sweep(field, Ks, N, sigma_noise, trials=None, seed=None, rule=None, scale_factor=1.0,
             boundary=False, threads=None, config=None, dump_dir=None):
    """Monte-Carlo bias–variance of least squares on nested FPS dictionaries."""
    Ks = _check_ks(Ks)
    if N < 1:
        raise SizeError(f'N must be >= 1, got {N}')
    seed = settings.SPLATFIELD['SEED'] if seed is None else int(seed)
    rule = rule or midpoint_rule(field.domain)
    sensors = sensor_locations(rule, N, boundary)
    full = nested_centers(rule, Ks[-1])

    def row(K):
        cs = full.prefix(K, probe=rule)
        dictionary = Dictionary.from_centers(cs, scale_factor)
        G = gram_matrix(dictionary, rule)
        if dump_dir:
            A = design_matrix(dictionary, sensors)
            container.write_matrix(f'{dump_dir}/gram_K{K}.splf', G)
            container.write_matrix(f'{dump_dir}/design_K{K}.splf', A)
            clean_fit = fit_least_squares(A, field.evaluate(sensors))
            with open(f'{dump_dir}/fit_K{K}.json', 'wb') as handle:
                handle.write(render(LeastSquaresFitSerializer, clean_fit))
        report = bias_variance_mc(
            field, dictionary, sensors, sigma_noise, trials, rule,
            seed=rng.derive_seed(seed, 'row', K), G=G,
        )
        values = {name: getattr(report, name) for name in LS_COLUMNS if hasattr(report, name)}
        values['h'] = cs.fill_distance
        return values

    rows = run_rows(row, Ks, threads)
    fit, degenerate = _fit(Ks, [r['bias2'] for r in rows])

    summary = {'argmin_k': int(Ks[int(np.argmin([r['total'] for r in rows]))])}
    if len(Ks) >= 3 and sigma_noise > 0 and not is_degenerate([r['noise_variance'] for r in rows]):
        summary['variance_exponent'] = rate_fit(Ks, [r['noise_variance'] for r in rows]).exponent
    smoothness = getattr(field, 'smoothness', None)
    if sigma_noise > 0 and smoothness:
        norm = l2_norm(field, rule)
        k_star, k_rounded = optimal_k(N, sigma_noise, rule.domain.dimension, smoothness, norm)
        summary.update({'k_star': k_star, 'k_star_rounded': k_rounded})
    return SweepResult('ls', LS_COLUMNS, rows, 'total', fit, degenerate, dict(config or {}), summary)


# =============================================================================
# CAPACITY TABLE
# =============================================================================

def _exponent(value):
    return f'{value:.6g}'


@dataclass(frozen=True)
class OptimalKTable:
    d: int
    s_values: tuple
    N_values: tuple
    sigma_noise: float
    field_norm: float
    k_star: np.ndarray
    k_rounded: np.ndarray

    def rates(self, s):
        """Symbolic rate strings with numeric exponents for one smoothness."""
        d = self.d
        return {
            'fill_distance': f'K^-{_exponent(1 / d)}',
            'unnorm_rate': f'K^-{_exponent(s / d)}',
            'norm_rate': f'K^-{_exponent(1 / d)}',
            'optimal_k': f'(N/sigma^2)^{_exponent(d / (2 * s + d))}',
            'risk_scale': f'(sigma^2/N)^{_exponent(2 * s / (2 * s + d))}',
        }

    def text(self):
        header = ['s \\ N'] + [str(N) for N in self.N_values] + ['unnorm_rate', 'norm_rate', 'risk_scale']
        body = []
        for i, s in enumerate(self.s_values):
            rates = self.rates(s)
            body.append(
                [f'{s:g}'] + [str(int(k)) for k in self.k_rounded[i]]
                + [rates['unnorm_rate'], rates['norm_rate'], rates['risk_scale']]
            )
        widths = [max(len(row[j]) for row in [header] + body) for j in range(len(header))]
        lines = ['  '.join(cell.rjust(width) for cell, width in zip(row, widths)).rstrip()
                 for row in [header] + body]
        lines.append(f'h ~ {self.rates(self.s_values[0])["fill_distance"]}  (d={self.d})')
        return '\n'.join(lines) + '\n'

    def csv_text(self):
        lines = ['d,s,N,k_star,k_rounded,h,risk,unnorm_rate,norm_rate,risk_scale']
        for i, s in enumerate(self.s_values):
            rates = self.rates(s)
            for j, N in enumerate(self.N_values):
                k_star = self.k_star[i, j]
                risk = optimal_risk(N, self.sigma_noise, self.d, s, self.field_norm)
                lines.append(','.join([
                    str(self.d), f'{s:g}', str(N), '%.17g' % k_star, str(int(self.k_rounded[i, j])),
                    '%.17g' % (k_star ** (-1.0 / self.d)), '%.17g' % risk,
                    rates['unnorm_rate'], rates['norm_rate'], rates['risk_scale'],
                ]))
        return '\n'.join(lines) + '\n'


def optk_table(d, s_values, N_values, sigma_noise=1.0, field_norm=1.0):
    values = [[optimal_k(N, sigma_noise, d, s, field_norm) for N in N_values] for s in s_values]
    k_star = np.array([[k for k, _ in row] for row in values], dtype=float)
    k_rounded = np.array([[rounded for _, rounded in row] for row in values], dtype=int)
    return OptimalKTable(d, tuple(s_values), tuple(N_values), float(sigma_noise), float(field_norm), k_star, k_rounded)
