import json
import math

import numpy as np
from django.test import SimpleTestCase, tag

from Splatfield.exceptions import ParameterError, RateFitError, SizeError
from estimator.capacity import optimal_k
from field.analytic import make_constant, make_fourier_random, make_taylor_green
from field.domain import Domain
from field.grid import roughness, sample_grid, smooth_grid
from field.metrics import l2_norm
from field.quadrature import midpoint_rule
from sweep.experiments import (
    default_k_grid, ls_sweep, optk_table, oracle_sweep, power_of_two_grid,
    projection_sweep, seed_band, sensor_locations,
)
from sweep.rates import rate_fit
from sweep.results import ORACLE_COLUMNS, SweepResult

# Kernel width of the nested-FPS oracle whose rate is checked against first order
SATURATION_SCALE_FACTOR = 0.3


def make_rule(resolution=64, d=2):
    return midpoint_rule(Domain.unit(d), resolution)


def make_rows(Ks, errors):
    return [{'K': K, 'h': 1 / math.sqrt(K), 'q': 0.5 / math.sqrt(K), 'rho': 2.0, 'smooth_px': 0.0, 'rel_l2': e}
            for K, e in zip(Ks, errors)]


class RateFitTests(SimpleTestCase):
    def test_exact_power_law(self):
        Ks = [16, 32, 64, 128, 256]
        fit = rate_fit(Ks, [3.0 * K ** -0.5 for K in Ks])
        self.assertAlmostEqual(fit.exponent, -0.5, delta=1e-10)
        self.assertAlmostEqual(fit.constant, 3.0, delta=1e-9)
        self.assertAlmostEqual(fit.r_squared, 1.0, delta=1e-12)

    def test_constant_errors(self):
        fit = rate_fit([4, 8, 16], [0.3, 0.3, 0.3])
        self.assertAlmostEqual(fit.exponent, 0.0, delta=1e-12)
        self.assertEqual(fit.r_squared, 1.0)

    def test_three_point_raw_field_data(self):
        fit = rate_fit([16, 128, 2048], [1.0851, 0.7452, 0.4144])
        self.assertAlmostEqual(fit.exponent, -0.20, delta=0.05)

    def test_decreasing_errors_give_negative_exponent(self):
        self.assertLess(rate_fit([1, 2, 3, 4], [1.0, 0.99, 0.5, 0.49]).exponent, 0)

    def test_needs_three_points(self):
        with self.assertRaises(SizeError):
            rate_fit([4, 8], [1.0, 0.5])

    def test_rejects_non_positive_errors(self):
        with self.assertRaises(RateFitError):
            rate_fit([4, 8, 16], [1.0, 0.0, 0.5])

    def test_rejects_unsorted_ks(self):
        with self.assertRaises(ParameterError):
            rate_fit([8, 4, 16], [1.0, 0.5, 0.2])


class KGridTests(SimpleTestCase):
    def test_powers_of_two(self):
        self.assertEqual(len(power_of_two_grid(16, 4096)), 9)
        self.assertEqual(default_k_grid(3), [16, 32, 64, 128, 256, 512, 1024])

    def test_rejects_inverted_range(self):
        with self.assertRaises(ParameterError):
            power_of_two_grid(64, 16)


class SweepResultTests(SimpleTestCase):
    def make_result(self):
        Ks = [4, 8, 16]
        errors = [0.4, 0.2, 0.1]
        return SweepResult('oracle', ORACLE_COLUMNS, make_rows(Ks, errors), 'rel_l2',
                           rate_fit(Ks, errors), config={'field': 'taylor-green', 'seed': 42})

    def test_rows_must_increase(self):
        with self.assertRaises(ParameterError):
            SweepResult('oracle', ORACLE_COLUMNS, make_rows([8, 4], [0.1, 0.2]))

    def test_csv_layout(self):
        lines = self.make_result().csv_text().split('\n')
        self.assertEqual(lines[0], 'K,h,q,rho,smooth_px,rel_l2')
        self.assertEqual(lines[1].split(',')[0], '4')
        self.assertEqual(lines[1].split(',')[-1], '0.40000000000000002')
        self.assertTrue(any(line.startswith('# exponent=-') for line in lines))
        self.assertIn('# config.field=taylor-green', lines)
        self.assertTrue(lines[-2].startswith('# version='))
        self.assertEqual(lines[-1], '')

    def test_json_summary(self):
        payload = json.loads(self.make_result().json_bytes())
        self.assertEqual(payload['tag'], 'oracle')
        self.assertEqual(len(payload['rows']), 3)
        self.assertAlmostEqual(payload['fit']['exponent'], -1.0)

    def test_svg(self):
        svg = self.make_result().svg_text()
        self.assertTrue(svg.startswith('<svg'))
        self.assertIn('<polyline', svg)
        self.assertIn('rel_l2', svg)


class OracleSweepTests(SimpleTestCase):
    def setUp(self):
        self.rule = make_rule()
        self.domain = self.rule.domain

    def test_constant_field_is_degenerate(self):
        result = oracle_sweep(make_constant(self.domain, 2.0), [4, 8, 16], rule=self.rule)
        self.assertTrue(np.all(result.column('rel_l2') < 1e-12))
        self.assertIsNone(result.fit)
        self.assertTrue(result.degenerate)
        self.assertIn('# rate_fit=skipped (degenerate errors)', result.csv_text().split('\n'))

    def test_rows_sorted_and_geometry_reported(self):
        result = oracle_sweep(make_taylor_green(self.domain), [64, 16, 32], rule=self.rule)
        self.assertEqual(list(result.Ks), [16, 32, 64])
        self.assertTrue(np.all(np.diff(result.column('h')) <= 0))
        self.assertTrue(np.all(result.column('rho') <= 4.0))
        self.assertIsNotNone(result.fit)

    def test_independent_of_thread_count(self):
        field = make_taylor_green(self.domain)
        serial = oracle_sweep(field, [16, 32, 64], rule=self.rule, threads=1)
        parallel = oracle_sweep(field, [16, 32, 64], rule=self.rule, threads=3)
        self.assertEqual(serial.csv_text(), parallel.csv_text())

    def test_zero_smoothing_matches_raw_field(self):
        field = make_taylor_green(self.domain)
        raw = oracle_sweep(field, [16, 32, 64], rule=self.rule)
        unsmoothed = oracle_sweep(field, [16, 32, 64], smooth_px=0.0, rule=self.rule)
        self.assertEqual(raw.csv_text(), unsmoothed.csv_text())

    def test_smoothed_truth_is_used(self):
        field = make_fourier_random(self.domain, 1.0, 16, 7)
        smoothed = oracle_sweep(field, [16, 32, 64], smooth_px=4.0, rule=self.rule)
        self.assertTrue(np.all(smoothed.column('smooth_px') == 4.0))
        raw = oracle_sweep(field, [16, 32, 64], rule=self.rule)
        self.assertLess(smoothed.column('rel_l2')[-1], raw.column('rel_l2')[-1])

    def test_seed_band(self):
        results = [
            oracle_sweep(make_fourier_random(self.domain, 1.0, 8, seed), [8, 16, 32], rule=self.rule)
            for seed in (1, 2, 3)
        ]
        band = seed_band(results)
        self.assertEqual(band.columns, ('K', 'h', 'mean', 'std', 'seeds'))
        expected = np.mean([r.column('rel_l2')[0] for r in results])
        self.assertAlmostEqual(band.rows[0]['mean'], expected, delta=1e-15)
        self.assertIn('exponent_mean', band.summary)

    def test_seed_band_needs_matching_grids(self):
        field = make_taylor_green(self.domain)
        with self.assertRaises(ParameterError):
            seed_band([oracle_sweep(field, [4, 8], rule=self.rule), oracle_sweep(field, [4, 16], rule=self.rule)])


class ProjectionSweepTests(SimpleTestCase):
    def test_error_decreases(self):
        rule = make_rule()
        result = projection_sweep(make_taylor_green(rule.domain), [16, 32, 64], rule=rule)
        self.assertTrue(np.all(np.diff(result.column('rel_l2')) < 0))
        self.assertTrue(np.all(result.column('cond_G') >= 1.0))
        self.assertLess(result.fit.exponent, 0)


class LeastSquaresSweepTests(SimpleTestCase):
    def setUp(self):
        self.rule = make_rule()
        self.domain = self.rule.domain

    def test_boundary_sensors_lie_on_outer_ring(self):
        sensors = sensor_locations(self.rule, 8, boundary=True)
        spacing = 1.0 / 64
        near_edge = np.any((sensors < spacing) | (sensors > 1 - spacing), axis=1)
        self.assertTrue(np.all(near_edge))

    def test_too_many_sensors(self):
        with self.assertRaises(SizeError):
            sensor_locations(self.rule, 300, boundary=True)

    def test_noiseless_dense_sensors(self):
        field = make_taylor_green(self.domain)
        result = ls_sweep(field, [4, 8, 16, 32], 1024, 0.0, trials=2, rule=self.rule)
        self.assertTrue(np.all(result.column('noise_variance') <= 1e-10))
        total = result.column('total')
        self.assertTrue(np.all(np.diff(total) <= 1e-9 * total[0]), msg=str(total))
        self.assertLess(result.column('bias2')[-1], result.column('bias2')[0])
        self.assertNotIn('k_star', result.summary)

    def test_shared_rows_survive_superset(self):
        field = make_fourier_random(self.domain, 1.0, 8, 7)
        small = ls_sweep(field, [4, 8], 32, 0.1, trials=20, seed=5, rule=self.rule)
        large = ls_sweep(field, [4, 8, 16], 32, 0.1, trials=20, seed=5, rule=self.rule)
        self.assertEqual(small.rows, large.rows[:2])

    def test_independent_of_thread_count(self):
        field = make_fourier_random(self.domain, 1.0, 8, 7)
        serial = ls_sweep(field, [4, 8, 16], 32, 0.1, trials=20, seed=5, rule=self.rule, threads=1)
        parallel = ls_sweep(field, [4, 8, 16], 32, 0.1, trials=20, seed=5, rule=self.rule, threads=3)
        self.assertEqual(serial.csv_text(), parallel.csv_text())

    def test_reports_capacity_prediction(self):
        field = make_fourier_random(self.domain, 1.0, 8, 7)
        result = ls_sweep(field, [4, 8, 16], 64, 0.2, trials=20, rule=self.rule)
        self.assertIn(result.summary['argmin_k'], (4, 8, 16))
        expected = optimal_k(64, 0.2, 2, 1.0, l2_norm(field, self.rule))
        self.assertEqual(result.summary['k_star_rounded'], expected[1])
        self.assertIn('variance_exponent', result.summary)


class OptimalKTableTests(SimpleTestCase):
    def test_two_dimensional_matrix(self):
        table = optk_table(2, [1, 2, 3], [4, 8, 16, 32])
        self.assertEqual(table.k_rounded.tolist(), [[2, 3, 4, 6], [2, 2, 3, 3], [1, 2, 2, 2]])

    def test_three_dimensional_entry(self):
        table = optk_table(3, [2], [32])
        self.assertEqual(table.k_rounded[0, 0], 4)

    def test_single_sensor(self):
        for s in (1, 2, 3):
            self.assertEqual(optk_table(2, [s], [1]).k_rounded[0, 0], 1)

    def test_rate_strings(self):
        rates = optk_table(2, [1], [4]).rates(1)
        self.assertEqual(rates['unnorm_rate'], 'K^-0.5')
        self.assertEqual(rates['risk_scale'], '(sigma^2/N)^0.5')

    def test_text_and_csv(self):
        table = optk_table(2, [1, 2, 3], [4, 8, 16, 32])
        lines = table.text().splitlines()
        self.assertEqual(lines[1].split()[:5], ['1', '2', '3', '4', '6'])
        self.assertEqual(len(table.csv_text().splitlines()), 1 + 12)


@tag('slow')
class AcceptanceTests(SimpleTestCase):
    """Full-size sweeps; run with `manage.py test --tag slow`."""

    def setUp(self):
        self.domain = Domain.unit(2)

    def test_shepard_saturation_rate(self):
        result = oracle_sweep(
            make_taylor_green(self.domain), power_of_two_grid(16, 4096), scale_factor=SATURATION_SCALE_FACTOR,
        )
        self.assertTrue(-0.70 <= result.fit.exponent <= -0.35, msg=result.fit)

    def test_wide_kernels_cancel_first_moments(self):
        # FPS over the quadrature nodes is lattice-like, so c_sigma = 1 reproduces
        # linears in the interior and only the boundary layer stays first order
        result = oracle_sweep(make_taylor_green(self.domain), power_of_two_grid(16, 4096), scale_factor=1.0)
        self.assertLess(result.fit.exponent, -0.70, msg=result.fit)

    def test_smoothing_steepens_the_rate(self):
        field = make_fourier_random(self.domain, 1.0, 16, 7)
        rule = midpoint_rule(self.domain)
        exponents, roughnesses = [], []
        for smooth_px in (0, 1, 4, 8):
            result = oracle_sweep(field, power_of_two_grid(16, 4096), smooth_px=smooth_px, rule=rule)
            exponents.append(result.fit.exponent)
            roughnesses.append(roughness(smooth_grid(sample_grid(field, rule.resolution), smooth_px)))
        self.assertTrue(np.all(np.diff(exponents) < 0), msg=str(exponents))
        self.assertTrue(np.all(np.diff(roughnesses) < 0), msg=str(roughnesses))

    def test_variance_scaling_and_decomposition(self):
        field = make_fourier_random(self.domain, 1.0, 16, 7)
        result = ls_sweep(field, [4, 8, 16, 32], 64, 0.1, trials=200)
        self.assertTrue(0.6 <= result.summary['variance_exponent'] <= 1.4, msg=result.summary)
        for row in result.rows:
            if row['c_low'] >= 0.01:
                self.assertLessEqual(abs(row['total'] - row['bias2'] - row['variance']), 3 * row['total_se'])
        louder = ls_sweep(field, [16], 64, 0.4, trials=200)
        ratio = louder.rows[0]['noise_variance'] / result.rows[2]['noise_variance']
        self.assertAlmostEqual(ratio, 16.0, delta=16.0 * 0.2)

    def test_capacity_argmin(self):
        field = make_fourier_random(self.domain, 1.0, 16, 7)
        result = ls_sweep(field, [4, 8, 16, 32, 64], 64, 0.2, trials=200)
        ratio = result.summary['argmin_k'] / result.summary['k_star']
        self.assertTrue(0.25 <= ratio <= 4.0, msg=result.summary)
