import json
import math

import numpy as np
from django.test import SimpleTestCase

from Splatfield import rng
from Splatfield.exceptions import ConditioningError, ParameterError, SizeError
from centers.sampling import farthest_point_sample, grid_centers
from estimator.capacity import optimal_k, optimal_risk
from estimator.dictionary import (
    Dictionary, GaussianExpansion, design_matrix, gaussian_overlap, gram_matrix,
    load_vector, residual_norm_sq,
)
from estimator.fitting import (
    bias_variance_mc, fit_least_squares, noise_variance_theory, observe,
    project_l2, spectral_stability,
)
from estimator.serializers import BiasVarianceReportSerializer, LeastSquaresFitSerializer, render
from field.analytic import make_constant, make_fourier_random, make_taylor_green
from field.domain import Domain
from field.quadrature import midpoint_rule
from primitives.scaffold import PrimitiveSet, basis_eval


def make_dictionary(K=16, scale_factor=1.0, domain=None):
    domain = domain or Domain.unit(2)
    return Dictionary.from_centers(grid_centers(domain, K), scale_factor)


def make_isotropic(centers, sigma, domain=None):
    domain = domain or Domain.unit(2)
    centers = np.atleast_2d(centers)
    return Dictionary(domain, centers, np.full(len(centers), sigma), 0.0)


def make_in_span_field(dictionary, k=0):
    coefficients = np.zeros((dictionary.size, 1))
    coefficients[k, 0] = 1.0
    return GaussianExpansion(dictionary, coefficients)


class DesignMatrixTests(SimpleTestCase):
    def test_dictionary_from_many_centers(self):
        cs = grid_centers(Domain.unit(2), 64)
        dictionary = Dictionary.from_centers(cs, 0.5)
        self.assertEqual(dictionary.size, 64)
        np.testing.assert_array_equal(dictionary.sigma, np.full((64, 2), 0.5 * cs.fill_distance))
        self.assertEqual(design_matrix(dictionary, cs.centers).shape, (64, 64))

    def test_sensor_on_center(self):
        dictionary = make_dictionary(16)
        A = design_matrix(dictionary, dictionary.mu[[3, 7]])
        self.assertEqual(A[0, 3], 1.0)
        self.assertEqual(A[1, 7], 1.0)
        self.assertTrue(np.all((A > 0) & (A <= 1)))

    def test_single_column_matches_basis(self):
        dictionary = make_isotropic([[0.4, 0.6]], 0.1)
        sensors = rng.stream(1, 'sensors').uniform(size=(20, 2))
        ps = PrimitiveSet(dictionary.domain, dictionary.mu, dictionary.sigma, 0.0, 0.5, 0.0)
        np.testing.assert_array_equal(design_matrix(dictionary, sensors), basis_eval(ps, sensors))

    def test_narrow_kernels_at_centers_are_diagonally_dominant(self):
        cs = grid_centers(Domain.unit(2), 16)
        dictionary = Dictionary.from_centers(cs, cs.separation / (3 * cs.fill_distance))
        A = design_matrix(dictionary, cs.centers)
        off_diagonal = A.sum(axis=1) - np.diag(A)
        self.assertTrue(np.all(np.diag(A) > off_diagonal))
        self.assertEqual(np.linalg.matrix_rank(A), 16)


class GramMatrixTests(SimpleTestCase):
    def test_self_integral(self):
        sigma = 0.05
        G = gram_matrix(make_isotropic([[0.5, 0.5]], sigma), midpoint_rule(Domain.unit(2)))
        self.assertAlmostEqual(G[0, 0] / (math.pi * sigma ** 2), 1.0, delta=0.01)

    def test_self_integral_in_three_dimensions(self):
        sigma = 0.08
        domain = Domain.unit(3)
        G = gram_matrix(make_isotropic([[0.5, 0.5, 0.5]], sigma, domain), midpoint_rule(domain))
        self.assertAlmostEqual(G[0, 0] / (math.pi * sigma ** 2) ** 1.5, 1.0, delta=0.01)

    def test_overlap_of_two_primitives(self):
        sigma, distance = 0.05, 0.08
        dictionary = make_isotropic([[0.46, 0.5], [0.54, 0.5]], sigma)
        G = gram_matrix(dictionary, midpoint_rule(Domain.unit(2), 512))
        expected = gaussian_overlap(sigma, distance, 2)
        self.assertAlmostEqual(G[0, 1] / expected, 1.0, delta=0.01)

    def test_exactly_symmetric_and_bounded(self):
        gen = rng.stream(4, 'gram')
        dictionary = make_isotropic(gen.uniform(0.1, 0.9, size=(30, 2)), 0.2)
        G = gram_matrix(dictionary, midpoint_rule(Domain.unit(2), 64))
        self.assertEqual(np.abs(G - G.T).max(), 0.0)
        self.assertTrue(np.all(np.diag(G) <= 1.0))
        self.assertGreater(np.linalg.eigvalsh(G)[0], -1e-12)


class LeastSquaresTests(SimpleTestCase):
    def setUp(self):
        self.dictionary = make_dictionary(9, scale_factor=0.5)
        self.sensors = rng.stream(2, 'ls-sensors').uniform(0.02, 0.98, size=(60, 2))
        self.A = design_matrix(self.dictionary, self.sensors)

    def test_consistent_system_is_recovered(self):
        c0 = rng.stream(3, 'c0').normal(size=(9, 2))
        fit = fit_least_squares(self.A, self.A @ c0, ridge=0.0)
        np.testing.assert_allclose(fit.coefficients, c0, atol=1e-8)
        self.assertFalse(fit.interpolatory)

    def test_zero_data(self):
        fit = fit_least_squares(self.A, np.zeros(60), ridge=0.0)
        np.testing.assert_array_equal(fit.coefficients, 0.0)
        np.testing.assert_array_equal(fit.residual_norm, 0.0)

    def test_ridge_shrinks_coefficients(self):
        y = rng.stream(5, 'y').normal(size=60)
        norms = [np.linalg.norm(fit_least_squares(self.A, y, ridge=lam).coefficients)
                 for lam in (1e-6, 1e-2, 1e2)]
        self.assertGreater(norms[0], norms[1])
        self.assertGreater(norms[1], norms[2])

    def test_fit_json(self):
        c0 = rng.stream(3, 'c0').normal(size=(9, 2))
        fit = fit_least_squares(self.A, self.A @ c0, ridge=0.0)
        payload = json.loads(render(LeastSquaresFitSerializer, fit))
        self.assertEqual(payload['coefficients'], fit.coefficients.tolist())
        self.assertEqual(len(payload['residual_norm']), 2)
        self.assertEqual(payload['ridge'], 0.0)
        self.assertFalse(payload['interpolatory'])

    def test_interpolation_at_centers(self):
        cs = grid_centers(Domain.unit(2), 16)
        dictionary = Dictionary.from_centers(cs)
        obs = observe(make_taylor_green(cs.domain), cs.centers)
        fit = fit_least_squares(design_matrix(dictionary, obs), obs, ridge=0.0)
        self.assertTrue(fit.interpolatory)
        self.assertLessEqual(fit.residual_norm.max(), 1e-8 * np.abs(obs.clean).max())

    def test_singular_system_without_ridge(self):
        dictionary = make_isotropic([[0.3, 0.3], [0.3, 0.3]], 0.1)
        with self.assertRaises(ConditioningError):
            fit_least_squares(design_matrix(dictionary, self.sensors), np.ones(60), ridge=0.0)

    def test_underdetermined_system_gets_default_ridge(self):
        with self.assertLogs('estimator.fitting', level='WARNING'):
            fit = fit_least_squares(self.A[:5], np.ones(5))
        self.assertGreater(fit.ridge, 0.0)
        self.assertTrue(np.all(np.isfinite(fit.coefficients)))

    def test_negative_ridge_rejected(self):
        with self.assertRaises(ParameterError):
            fit_least_squares(self.A, np.ones(60), ridge=-1.0)


class ProjectionTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.rule = midpoint_rule(self.domain)
        self.dictionary = make_dictionary(16, scale_factor=0.5)
        self.G = gram_matrix(self.dictionary, self.rule)

    def test_dictionary_element_is_fixed(self):
        coefficients, _ = project_l2(make_in_span_field(self.dictionary), self.dictionary, self.G, self.rule)
        expected = np.zeros((16, 1))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(coefficients, expected, atol=1e-8)

    def test_zero_field(self):
        coefficients, _ = project_l2(make_constant(self.domain, 0.0), self.dictionary, self.G, self.rule)
        np.testing.assert_array_equal(coefficients, 0.0)

    def test_singular_gram_raises(self):
        dictionary = make_isotropic([[0.3, 0.3], [0.3, 0.3]], 0.1)
        with self.assertRaises(ConditioningError) as ctx:
            project_l2(make_taylor_green(self.domain), dictionary, np.ones((2, 2)), self.rule)
        self.assertAlmostEqual(ctx.exception.pivot, 0.0, delta=1e-12)

    def test_residual_is_gram_orthogonal(self):
        field = make_taylor_green(self.domain)
        coefficients, _ = project_l2(field, self.dictionary, self.G, self.rule)
        b = load_vector(field, self.dictionary, self.rule)
        for channel in range(3):
            gap = np.abs(b[:, channel] - self.G @ coefficients[:, channel]).max()
            self.assertLessEqual(gap, 1e-8 * np.linalg.norm(b[:, channel]))

    def test_projection_beats_perturbations(self):
        field = make_taylor_green(self.domain)
        coefficients, best = project_l2(field, self.dictionary, self.G, self.rule)
        best_error = residual_norm_sq(field, best, self.rule).sum()
        gen = rng.stream(6, 'perturb')
        for _ in range(20):
            trial = GaussianExpansion(self.dictionary, coefficients + 0.01 * gen.normal(size=coefficients.shape))
            self.assertGreaterEqual(residual_norm_sq(field, trial, self.rule).sum(), best_error - 1e-10)

    def test_refinement_reduces_error(self):
        field = make_taylor_green(self.domain)
        candidates = self.domain.cell_centers(128)
        full = farthest_point_sample(candidates, 256, self.domain)
        errors = []
        for K in (64, 256):
            dictionary = Dictionary.from_centers(full.prefix(K))
            _, approx = project_l2(field, dictionary, gram_matrix(dictionary, self.rule), self.rule)
            errors.append(residual_norm_sq(field, approx, self.rule).sum())
        self.assertLessEqual(errors[1], errors[0])


class SpectralStabilityTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.rule = midpoint_rule(self.domain)

    def test_indefinite_gram_raises(self):
        dictionary = make_isotropic([[0.3, 0.3], [0.7, 0.7]], 0.1)
        A = design_matrix(dictionary, rng.stream(7, 'indefinite').uniform(size=(10, 2)))
        with self.assertRaises(ConditioningError) as ctx:
            spectral_stability(A, np.diag([1.0, -1.0]))
        self.assertEqual(ctx.exception.pivot, -1.0)

    def test_dense_sensors_match_gram(self):
        dictionary = make_dictionary(16)
        sensors = midpoint_rule(self.domain, 64).nodes
        G = gram_matrix(dictionary, self.rule)
        c_low, c_high = spectral_stability(design_matrix(dictionary, sensors), G, len(sensors), 1.0)
        self.assertAlmostEqual(c_low, 1.0, delta=0.1)
        self.assertAlmostEqual(c_high, 1.0, delta=0.1)

    def test_single_primitive_ratio(self):
        dictionary = make_isotropic([[0.5, 0.5]], 0.2)
        sensors = rng.stream(7, 'scalar').uniform(size=(25, 2))
        A = design_matrix(dictionary, sensors)
        G = gram_matrix(dictionary, self.rule)
        c_low, c_high = spectral_stability(A, G, 25, 1.0)
        expected = np.sum(A ** 2) / 25 / G[0, 0]
        self.assertAlmostEqual(c_low / expected, 1.0, delta=1e-9)
        self.assertAlmostEqual(c_high / expected, 1.0, delta=1e-9)

    def test_sparse_boundary_sensors_fail(self):
        dictionary = make_dictionary(256)
        ring = self.domain.cell_centers(128)[self.domain.boundary_cells(128)]
        sensors = ring[np.linspace(0, len(ring) - 1, 8).astype(int)]
        G = gram_matrix(dictionary, self.rule)
        c_low, _ = spectral_stability(design_matrix(dictionary, sensors), G, 8, 1.0)
        self.assertLess(c_low, 1e-6)


class BiasVarianceTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.rule = midpoint_rule(self.domain, 64)
        self.dictionary = make_dictionary(16)
        self.sensors = grid_centers(self.domain, 64).centers
        self.G = gram_matrix(self.dictionary, self.rule)

    def run_mc(self, field, sigma_noise, trials=200, sensors=None):
        return bias_variance_mc(
            field, self.dictionary, self.sensors if sensors is None else sensors,
            sigma_noise, trials=trials, rule=self.rule, seed=42, G=self.G,
        )

    def test_noiseless_run_has_no_noise_variance(self):
        report = self.run_mc(make_taylor_green(self.domain), 0.0, trials=10)
        self.assertLessEqual(report.noise_variance, 1e-10)
        self.assertAlmostEqual(report.total, report.bias2 + report.aliasing, delta=1e-10)

    def test_field_in_span_has_no_bias(self):
        report = self.run_mc(make_in_span_field(self.dictionary, 5), 0.05, trials=100)
        self.assertLessEqual(report.bias2, 1e-12)
        self.assertLessEqual(report.aliasing, 1e-12)
        self.assertAlmostEqual(report.total / report.variance, 1.0, delta=1e-6)

    def test_doubling_noise_quadruples_variance(self):
        field = make_fourier_random(self.domain, 1.0, 8, 7)
        low = self.run_mc(field, 0.1)
        high = self.run_mc(field, 0.2)
        self.assertAlmostEqual(high.noise_variance / low.noise_variance, 4.0, delta=0.8)

    def test_monte_carlo_matches_closed_form(self):
        report = self.run_mc(make_taylor_green(self.domain), 0.1)
        self.assertAlmostEqual(report.noise_variance / report.noise_variance_theory, 1.0, delta=0.2)

    def test_pythagorean_decomposition(self):
        report = self.run_mc(make_fourier_random(self.domain, 1.0, 8, 7), 0.1)
        self.assertGreaterEqual(report.c_low, 0.01)
        self.assertLessEqual(report.decomposition_gap, 3 * report.total_se)

    def test_more_sensors_less_variance(self):
        field = make_fourier_random(self.domain, 1.0, 8, 7)
        variances = [
            self.run_mc(field, 0.1, sensors=grid_centers(self.domain, N).centers).noise_variance
            for N in (16, 64, 256)
        ]
        for coarse, fine in zip(variances, variances[1:]):
            self.assertTrue(2.0 <= coarse / fine <= 8.0, msg=str(variances))

    def test_reproducible(self):
        field = make_taylor_green(self.domain)
        self.assertEqual(self.run_mc(field, 0.1, trials=20), self.run_mc(field, 0.1, trials=20))

    def test_needs_two_trials(self):
        with self.assertRaises(SizeError):
            self.run_mc(make_taylor_green(self.domain), 0.1, trials=1)

    def test_theory_scales_with_noise(self):
        A = design_matrix(self.dictionary, self.sensors)
        self.assertAlmostEqual(
            noise_variance_theory(A, self.G, 0.0, 0.4) / noise_variance_theory(A, self.G, 0.0, 0.1),
            16.0, delta=1e-9,
        )

    def test_report_json(self):
        report = self.run_mc(make_taylor_green(self.domain), 0.1, trials=5)
        payload = json.loads(render(BiasVarianceReportSerializer, report))
        self.assertEqual(payload['K'], 16)
        self.assertEqual(payload['N'], 64)
        self.assertIn('decomposition_gap', payload)


class CapacityTests(SimpleTestCase):
    def test_two_dimensional_table(self):
        expected = {1: [2, 3, 4, 6], 2: [2, 2, 3, 3], 3: [1, 2, 2, 2]}
        for s, row in expected.items():
            self.assertEqual([optimal_k(N, 1.0, 2, s)[1] for N in (4, 8, 16, 32)], row)

    def test_three_dimensional_table(self):
        expected = {1: [2, 3, 8, 18], 2: [2, 2, 4, 8], 3: [2, 2, 3, 5]}
        for s, row in expected.items():
            self.assertEqual([optimal_k(N, 1.0, 3, s)[1] for N in (4, 8, 32, 128)], row)

    def test_unrounded_value(self):
        k_star, rounded = optimal_k(16, 1.0, 2, 2)
        self.assertAlmostEqual(k_star, 16 ** (1 / 3), delta=1e-12)
        self.assertEqual(rounded, 3)

    def test_unit_ratio_floors_at_one(self):
        self.assertEqual(optimal_k(4, 2.0, 2, 1), (1.0, 1))
        self.assertEqual(optimal_k(1, 1.0, 2, 3)[1], 1)

    def test_risk_balances_terms(self):
        risk = optimal_risk(64, 0.5, 2, 1)
        self.assertAlmostEqual(risk, (0.25 / 64) ** 0.5, delta=1e-15)

    def test_rejects_non_positive_arguments(self):
        with self.assertRaises(ParameterError):
            optimal_k(0, 1.0, 2, 1)
        with self.assertRaises(ParameterError):
            optimal_k(4, 1.0, 2, 1, field_norm=-1.0)
