"""
Fast invariant suite behind `manage.py selftest`.

Every check is deterministic (fixed seeds, fixed grids) so repeated runs
print identical PASS/FAIL lines.
"""
import logging
from dataclasses import dataclass

import numpy as np

from Splatfield import rng
from Splatfield.exceptions import SplatfieldError
from centers.sampling import grid_centers
from estimator.dictionary import Dictionary, design_matrix, gaussian_overlap, gram_matrix
from estimator.fitting import bias_variance_mc, fit_least_squares, observe
from field.analytic import make_constant, make_fourier_random
from field.domain import Domain
from field.quadrature import midpoint_rule
from primitives.scaffold import eval_scaffold, moment_sum, oracle_scaffold, shepard_matrix

logger = logging.getLogger(__name__)

SEED = 42


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_partition_of_unity():
    domain = Domain.unit(2)
    cs = grid_centers(domain, 64)
    ps = oracle_scaffold(make_constant(domain, 1.0), cs)
    points = rng.stream(SEED, 'selftest', 'pou').uniform(size=(10_000, 2))
    gap = float(np.abs(shepard_matrix(ps, points).sum(axis=1) - 1.0).max())
    return gap <= 1e-12, f'max |sum psi - 1| = {gap:.3e}'


def check_constant_reproduction():
    domain = Domain.unit(2)
    ps = oracle_scaffold(make_constant(domain, 2.5), grid_centers(domain, 64))
    points = rng.stream(SEED, 'selftest', 'constant').uniform(size=(2_000, 2))
    gap = float(np.abs(eval_scaffold(ps, points).values - 2.5).max())
    return gap <= 1e-12, f'max deviation = {gap:.3e}'


def check_moment_localization():
    domain = Domain.unit(2)
    probe = midpoint_rule(domain, 64).nodes
    field = make_constant(domain, 1.0)
    scaled = []
    for K in (64, 256):
        cs = grid_centers(domain, K)
        scaled.append(float(moment_sum(oracle_scaffold(field, cs), probe, 1).max() / cs.fill_distance))
    spread = max(scaled) / min(scaled)
    return spread <= 2.0, f'max M1/h over K=64,256: {scaled[0]:.3f}, {scaled[1]:.3f}'


def check_interpolation_recovery():
    cs = grid_centers(Domain.unit(2), 16)
    obs = observe(make_fourier_random(cs.domain, 1.0, 8, SEED), cs.centers)
    fit = fit_least_squares(design_matrix(Dictionary.from_centers(cs, 1.0), obs), obs, ridge=0.0)
    residual = float(fit.residual_norm.max() / np.abs(obs.clean).max())
    passed = fit.interpolatory and residual <= 1e-8
    return passed, f'N = K = 16 at the centers, relative residual = {residual:.3e}'


def check_gram_closed_form():
    domain = Domain.unit(2)
    sigma, distance = 0.05, 0.08
    dictionary = Dictionary(domain, np.array([[0.46, 0.5], [0.54, 0.5]]), np.full(2, sigma), 0.0)
    G = gram_matrix(dictionary, midpoint_rule(domain, 256))
    ratios = (
        G[0, 0] / gaussian_overlap(sigma, 0.0, 2),
        G[0, 1] / gaussian_overlap(sigma, distance, 2),
    )
    worst = max(abs(ratio - 1.0) for ratio in ratios)
    return worst <= 0.01, f'worst relative gap = {worst:.3e}'


def check_pythagorean():
    domain = Domain.unit(2)
    rule = midpoint_rule(domain, 64)
    dictionary = Dictionary.from_centers(grid_centers(domain, 16), 1.0)
    report = bias_variance_mc(
        make_fourier_random(domain, 1.0, 8, 7), dictionary, grid_centers(domain, 64).centers,
        0.1, trials=50, rule=rule, seed=SEED,
    )
    if report.c_low < 0.01:
        return False, f'sensor layout unstable: c_low = {report.c_low:.3e}'
    bound = 3 * report.total_se
    return report.decomposition_gap <= bound, f'gap {report.decomposition_gap:.3e} vs 3·se {bound:.3e}'


CHECKS = (
    ('partition-of-unity', check_partition_of_unity),
    ('constant-reproduction', check_constant_reproduction),
    ('moment-localization', check_moment_localization),
    ('interpolation-recovery', check_interpolation_recovery),
    ('gram-closed-form', check_gram_closed_form),
    ('pythagorean-decomposition', check_pythagorean),
)


def run_invariant_suite(checks=CHECKS):
    results = []
    for name, check in checks:
        try:
            passed, detail = check()
        except SplatfieldError as exc:
            passed, detail = False, f'{type(exc).__name__}: {exc}'
        except Exception as exc:
            logger.exception(f'Invariant {name} raised')
            passed, detail = False, f'unexpected {type(exc).__name__}: {exc}'
        if not passed:
            logger.warning(f'Invariant {name} failed: {detail}')
        results.append(CheckResult(name, bool(passed), detail))
    return results
