"""
Least-squares estimation on a fixed dictionary from noisy point samples,
L² projection, spectral stability and the Monte-Carlo bias–variance split.

Norms of dictionary elements use the Gram matrix of the same quadrature
rule as the field norms, so ‖Σ c_k φ_k‖² = cᵀ G c holds exactly.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy.linalg import LinAlgError, cho_factor, cho_solve, eigh, solve_triangular

from Splatfield import rng
from Splatfield.exceptions import ConditioningError, ParameterError, SizeError
from field.metrics import values_at
from field.quadrature import midpoint_rule
from .dictionary import (
    GaussianExpansion, design_matrix, gram_matrix, load_vector, residual_norm_sq,
)

logger = logging.getLogger(__name__)


# =============================================================================
# OBSERVATIONS
# =============================================================================

@dataclass(frozen=True, eq=False)
class ObservationSet:
    locations: np.ndarray
    clean: np.ndarray
    sigma_noise: float
    noisy: np.ndarray
    seed: int
    trial: int = 0

    @property
    def size(self):
        return len(self.locations)


def noise_draw(seed, trial, shape):
    """Standard normal draws for one Monte-Carlo trial."""
    return rng.stream(seed, 'noise', trial).standard_normal(shape)


def observe(field, locations, sigma_noise=0.0, seed=None, trial=0):
    """y_i = f(x_i) + ε_i with ε_i ~ N(0, σ²), reproducible from (seed, trial)."""
    locations = np.atleast_2d(np.asarray(locations, dtype=float))
    if len(locations) < 1:
        raise SizeError('at least one sensor is required')
    if sigma_noise < 0:
        raise ParameterError(f'sigma_noise must be >= 0, got {sigma_noise}')
    seed = settings.SPLATFIELD['SEED'] if seed is None else int(seed)
    clean = np.asarray(field.evaluate(locations), dtype=float).reshape(len(locations), -1)
    noisy = clean + sigma_noise * noise_draw(seed, trial, clean.shape)
    return ObservationSet(locations, clean, float(sigma_noise), noisy, seed, trial)


# =============================================================================
# LEAST SQUARES
# =============================================================================

@dataclass(frozen=True, eq=False)
class LeastSquaresFit:
    coefficients: np.ndarray
    ridge: float
    condition: float
    residual_norm: np.ndarray
    interpolatory: bool


@dataclass(frozen=True)
class NormalEquations:
    """Cholesky factor of AᵀA + λI with the diagnostics of the unregularized system."""

    factor: tuple
    ridge: float
    condition: float
    min_eigenvalue: float


def default_ridge(gram_eigenvalues, N, K, trace):
    config = settings.SPLATFIELD
    smallest, largest = gram_eigenvalues
    condition = largest / smallest if smallest > 0 else math.inf
    if N < K or condition > config['RIDGE_CONDITION_TRIGGER']:
        return config['RIDGE_SCALE'] * trace / K
    return 0.0


def factor_normal_equations(A, ridge=None):
    A = np.atleast_2d(A)
    N, K = A.shape
    normal = A.T @ A
    eigenvalues = np.linalg.eigvalsh(normal)
    smallest, largest = float(eigenvalues[0]), float(eigenvalues[-1])
    if ridge is None:
        ridge = default_ridge((smallest, largest), N, K, float(np.trace(normal)))
        if ridge > 0:
            logger.warning(f'Ridge {ridge:.3e} activated (N={N}, K={K}, min eig {smallest:.3e})')
    if ridge < 0:
        raise ParameterError(f'ridge must be >= 0, got {ridge}')
    if ridge == 0 and smallest <= np.finfo(float).eps * K * largest:
        raise ConditioningError('normal matrix AᵀA is singular; pass a ridge', pivot=smallest)
    try:
        factor = cho_factor(normal + ridge * np.eye(K), lower=True)
    except LinAlgError as exc:
        raise ConditioningError(f'normal equations not positive definite: {exc}', pivot=smallest) from exc
    condition = (largest + ridge) / (smallest + ridge) if smallest + ridge > 0 else math.inf
    return NormalEquations(factor, float(ridge), float(condition), smallest)


def fit_least_squares(A, obs, ridge=None, normal=None):
    """ĉ = (AᵀA + λI)⁻¹ Aᵀ y, every channel solved with one Cholesky factor.

    obs is an ObservationSet (its noisy readings are fitted) or an array y.
    """
    A = np.atleast_2d(A)
    y = np.asarray(getattr(obs, 'noisy', obs), dtype=float).reshape(A.shape[0], -1)
    normal = normal or factor_normal_equations(A, ridge)
    coefficients = cho_solve(normal.factor, A.T @ y)
    if not np.all(np.isfinite(coefficients)):
        raise ConditioningError('least-squares coefficients are not finite', pivot=normal.min_eigenvalue)
    residual = np.linalg.norm(A @ coefficients - y, axis=0)
    interpolatory = bool(np.linalg.matrix_rank(A) == A.shape[0])
    return LeastSquaresFit(coefficients, normal.ridge, normal.condition, residual, interpolatory)


# =============================================================================
# PROJECTION AND STABILITY
# =============================================================================

def project_l2(field, dictionary, G, rule, ridge=0.0):
    """Best L² approximation f*_K: solve G c* = b with b_j = ∫ f φ_j.

    Returns (c*, f*_K).
    """
    b = load_vector(field, dictionary, rule)
    K = dictionary.size
    try:
        factor = cho_factor(G + ridge * np.eye(K), lower=True)
    except LinAlgError as exc:
        smallest = float(np.linalg.eigvalsh(G)[0])
        raise ConditioningError(f'Gram matrix is singular for K={K}', pivot=smallest) from exc
    coefficients = cho_solve(factor, b)
    return coefficients, GaussianExpansion(dictionary, coefficients)


def spectral_stability(A, G, N=None, volume=1.0):
    """Extreme generalized eigenvalues of ((|Ω|/N) AᵀA, G).

    G is whitened through its Cholesky factor after adding
    jitter · trace(G)/K to the diagonal.
    """
    A = np.atleast_2d(A)
    N = A.shape[0] if N is None else N
    K = G.shape[0]
    jitter = settings.SPLATFIELD['GRAM_JITTER'] * np.trace(G) / K
    try:
        lower = np.linalg.cholesky(0.5 * (G + G.T) + jitter * np.eye(K))
    except np.linalg.LinAlgError as exc:
        raise ConditioningError('Gram matrix is indefinite', pivot=float(np.linalg.eigvalsh(G)[0])) from exc
    sampled = (volume / N) * (A.T @ A)
    half = solve_triangular(lower, sampled, lower=True)
    whitened = solve_triangular(lower, half.T, lower=True)
    eigenvalues = eigh(0.5 * (whitened + whitened.T), eigvals_only=True)
    return float(eigenvalues[0]), float(eigenvalues[-1])


def noise_variance_theory(A, G, ridge, sigma_noise, channels=1):
    """σ² tr(G P Pᵀ) per channel, P = (AᵀA + λI)⁻¹ Aᵀ, times the channel count."""
    A = np.atleast_2d(A)
    factor = cho_factor(A.T @ A + ridge * np.eye(A.shape[1]), lower=True)
    P = cho_solve(factor, A.T)
    return float(sigma_noise ** 2 * channels * np.sum((G @ P) * P))


# =============================================================================
# MONTE CARLO
# =============================================================================

@dataclass(frozen=True)
class BiasVarianceReport:
    K: int
    N: int
    sigma_noise: float
    trials: int
    bias2: float
    variance: float
    total: float
    total_se: float
    noise_variance: float
    noise_variance_theory: float
    aliasing: float
    sensor_residual: float
    l2_residual: float
    residual_ratio: float
    c_low: float
    c_high: float
    ridge: float
    condition: float

    @property
    def decomposition_gap(self):
        return abs(self.total - self.bias2 - self.variance)


def _g_norm_sq(G, c):
    """Σ_channels cᵀ G c."""
    return float(np.sum(c * (G @ c)))


def bias_variance_mc(field, dictionary, sensors, sigma_noise, trials=None, rule=None,
                     seed=None, ridge=None, G=None):
    """Monte-Carlo estimate of E‖f − f̂_K‖² and its split.

    bias2 is ‖f − f*_K‖², variance the mean of ‖f*_K − f̂_K‖² over trials and
    total the mean of ‖f − f̂_K‖². The variance further splits into the
    noiseless sensor aliasing ‖f*_K − f̂_K⁰‖² and the pure noise part.
    """
    config = settings.SPLATFIELD
    trials = config['MC_TRIALS'] if trials is None else int(trials)
    seed = config['SEED'] if seed is None else int(seed)
    if trials < 2:
        raise SizeError(f'need at least 2 Monte-Carlo trials, got {trials}')
    rule = rule or midpoint_rule(dictionary.domain)
    G = gram_matrix(dictionary, rule) if G is None else G

    c_star, f_star = project_l2(field, dictionary, G, rule)
    b = load_vector(field, dictionary, rule)
    bias2 = float(residual_norm_sq(field, f_star, rule).sum())
    field_sq = float(rule.integrate(np.sum(values_at(field, rule) ** 2, axis=1)))

    obs = observe(field, sensors, 0.0, seed)
    A = design_matrix(dictionary, obs)
    normal = factor_normal_equations(A, ridge)
    c_clean = fit_least_squares(A, obs.clean, normal=normal).coefficients

    variance_t = np.empty(trials)
    total_t = np.empty(trials)
    noise_t = np.empty(trials)
    for t in range(trials):
        y = obs.clean + sigma_noise * noise_draw(seed, t, obs.clean.shape)
        c_hat = cho_solve(normal.factor, A.T @ y)
        variance_t[t] = _g_norm_sq(G, c_hat - c_star)
        noise_t[t] = _g_norm_sq(G, c_hat - c_clean)
        total_t[t] = field_sq - 2.0 * float(np.sum(c_hat * b)) + _g_norm_sq(G, c_hat)

    N, K = A.shape
    sensor_residual = float(np.linalg.norm(obs.clean - f_star.evaluate(obs.locations)) / math.sqrt(N))
    l2_residual = math.sqrt(bias2)
    c_low, c_high = spectral_stability(A, G, N, dictionary.domain.volume)
    if c_low < config['STABILITY_THRESHOLD']:
        logger.warning(f'Spectral stability fails at K={K}, N={N}: c_low={c_low:.3e}')

    report = BiasVarianceReport(
        K=K, N=N, sigma_noise=float(sigma_noise), trials=trials,
        bias2=bias2,
        variance=float(variance_t.mean()),
        total=float(max(total_t.mean(), 0.0)),
        total_se=float(total_t.std(ddof=1) / math.sqrt(trials)),
        noise_variance=float(noise_t.mean()),
        noise_variance_theory=noise_variance_theory(A, G, normal.ridge, sigma_noise, obs.clean.shape[1]),
        aliasing=_g_norm_sq(G, c_clean - c_star),
        sensor_residual=sensor_residual,
        l2_residual=l2_residual,
        residual_ratio=sensor_residual / l2_residual if l2_residual > 0 else math.inf,
        c_low=c_low, c_high=c_high,
        ridge=normal.ridge, condition=normal.condition,
    )
    logger.info(
        f'K={K} N={N} sigma={sigma_noise}: bias2={report.bias2:.3e} '
        f'variance={report.variance:.3e} total={report.total:.3e}'
    )
    return report
