import math
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from Splatfield.exceptions import (
    ContainerFormatError, DimensionError, ParameterError, UndefinedRatioError,
)
from field import container
from field.analytic import (
    fourier_field, half_lattice, make_constant, make_fourier_random,
    make_lamb_oseen, make_taylor_green,
)
from field.domain import Domain
from field.grid import GridField, roughness, sample_grid, smooth_grid, sobolev_seminorm
from field.metrics import l2_norm, rel_l2_error
from field.quadrature import midpoint_rule


def make_cosine_field(domain=None):
    """f(x) = cos(2π x₁) as a single-mode Fourier field."""
    domain = domain or Domain.unit(2)
    return fourier_field(domain, [[1.0, 0.0]], [[1.0]], [[0.0]], smoothness=4.0)


class DomainTests(SimpleTestCase):
    def test_unit_box(self):
        domain = Domain.unit(3)
        self.assertEqual(domain.dimension, 3)
        self.assertEqual(domain.volume, 1.0)

    def test_rejects_inverted_corners(self):
        with self.assertRaises(ParameterError):
            Domain((0.0, 1.0), (1.0, 0.5))

    def test_rejects_unsupported_dimension(self):
        with self.assertRaises(DimensionError):
            Domain((0.0,), (1.0,))

    def test_boundary_cells_form_outer_ring(self):
        domain = Domain.unit(2)
        self.assertEqual(len(domain.boundary_cells(8)), 8 * 8 - 6 * 6)


class QuadratureTests(SimpleTestCase):
    def test_weights_sum_to_volume(self):
        domain = Domain((0.0, -1.0, 0.0), (2.0, 1.0, 0.5))
        rule = midpoint_rule(domain, 7)
        self.assertTrue(np.all(rule.weights > 0))
        self.assertAlmostEqual(rule.weights.sum() / domain.volume, 1.0, delta=1e-12)

    def test_default_resolutions(self):
        self.assertEqual(midpoint_rule(Domain.unit(2)).resolution, (128, 128))
        self.assertEqual(midpoint_rule(Domain.unit(3)).resolution, (48, 48, 48))


class TaylorGreenTests(SimpleTestCase):
    def setUp(self):
        self.field = make_taylor_green(Domain.unit(2))

    def test_channels_and_declared_smoothness(self):
        self.assertEqual(self.field.channels, 3)
        self.assertEqual(self.field.smoothness, 4.0)

    def test_trig_identities(self):
        u = self.field.evaluate([[0.25, 0.25], [0.25, 0.0]])[:, 0]
        self.assertAlmostEqual(u[0], 0.0, delta=1e-15)
        self.assertAlmostEqual(u[1], 1.0, delta=1e-15)

    def test_generic_point(self):
        u, v, p = self.field.evaluate([0.1, 0.2])[0]
        self.assertAlmostEqual(u, math.sin(0.2 * math.pi) * math.cos(0.4 * math.pi), delta=1e-14)
        self.assertAlmostEqual(v, -math.cos(0.2 * math.pi) * math.sin(0.4 * math.pi), delta=1e-14)
        self.assertAlmostEqual(p, 0.25 * (math.cos(0.4 * math.pi) + math.cos(0.8 * math.pi)), delta=1e-14)

    def test_rejects_3d(self):
        with self.assertRaises(DimensionError):
            make_taylor_green(Domain.unit(3))


class FourierRandomTests(SimpleTestCase):
    def test_deterministic_from_seed(self):
        a = make_fourier_random(Domain.unit(2), 2.0, 8, seed=7)
        b = make_fourier_random(Domain.unit(2), 2.0, 8, seed=7)
        np.testing.assert_array_equal(a.params['amplitudes'], b.params['amplitudes'])
        np.testing.assert_array_equal(a.params['phases'], b.params['phases'])

    def test_different_seeds_differ(self):
        a = make_fourier_random(Domain.unit(2), 2.0, 8, seed=7)
        b = make_fourier_random(Domain.unit(2), 2.0, 8, seed=8)
        self.assertFalse(np.array_equal(a.params['amplitudes'], b.params['amplitudes']))

    def test_channel_replicas_use_distinct_streams(self):
        f = make_fourier_random(Domain.unit(2), 1.0, 4, seed=3, channels=2)
        self.assertEqual(f.channels, 2)
        self.assertFalse(np.array_equal(f.params['amplitudes'][0], f.params['amplitudes'][1]))

    def test_half_lattice_has_one_of_each_pair(self):
        ks = half_lattice(2, 3)
        self.assertEqual(len(ks), (7 * 7 - 1) // 2)
        as_set = {tuple(k) for k in ks}
        for k in ks:
            self.assertNotIn(tuple(-k), as_set)

    def test_single_mode_reduction(self):
        f = make_cosine_field()
        x = np.array([[0.1, 0.7], [0.33, 0.2]])
        np.testing.assert_allclose(f.evaluate(x)[:, 0], np.cos(2 * np.pi * x[:, 0]), atol=1e-14)

    def test_h2_seminorm_matches_coefficients(self):
        f = make_fourier_random(Domain.unit(2), 2.0, 16, seed=7)
        grid = sample_grid(f, 256)
        discrete = sobolev_seminorm(grid, 2)
        self.assertTrue(np.isfinite(discrete))
        self.assertAlmostEqual(discrete / f.coefficient_seminorm(2), 1.0, delta=0.10)

    def test_rejects_bad_parameters(self):
        with self.assertRaises(ParameterError):
            make_fourier_random(Domain.unit(2), 0.0, 4, seed=1)
        with self.assertRaises(ParameterError):
            make_fourier_random(Domain.unit(2), 1.0, 0, seed=1)


class LambOseenTests(SimpleTestCase):
    def setUp(self):
        self.a = 0.05
        self.field = make_lamb_oseen(Domain.unit(2), self.a, (0.5, 0.5))

    def test_peak_and_core_radius(self):
        peak = 1.0 / (math.pi * self.a ** 2)
        values = self.field.evaluate([[0.5, 0.5], [0.5 + self.a, 0.5]])[:, 0]
        self.assertAlmostEqual(values[0] / peak, 1.0, delta=1e-14)
        self.assertAlmostEqual(values[1] / peak, math.exp(-1.0), delta=1e-14)

    def test_unit_circulation_on_box(self):
        rule = midpoint_rule(Domain.unit(2), 512)
        total = rule.integrate(self.field.evaluate(rule.nodes)[:, 0])
        self.assertGreaterEqual(total, 0.999)
        self.assertLessEqual(total, 1.0 + 1e-9)

    def test_rejects_non_positive_core(self):
        with self.assertRaises(ParameterError):
            make_lamb_oseen(Domain.unit(2), 0.0)


class SampleGridTests(SimpleTestCase):
    def test_constant_field(self):
        grid = sample_grid(make_constant(Domain.unit(2), 2.5), (5, 3))
        self.assertTrue(np.all(grid.values == 2.5))

    def test_taylor_green_first_cell(self):
        grid = sample_grid(make_taylor_green(Domain.unit(2)), 4)
        self.assertAlmostEqual(grid.values[0, 0, 0], 0.5, delta=1e-15)

    def test_sampling_is_evaluation(self):
        f = make_fourier_random(Domain.unit(2), 2.0, 8, seed=7)
        grid = sample_grid(f, 64)
        direct = f.evaluate(Domain.unit(2).cell_centers(64))
        self.assertEqual(np.max(np.abs(grid.flat() - direct)), 0.0)

    def test_grid_evaluate_is_exact_at_centers(self):
        f = make_taylor_green(Domain.unit(2))
        grid = sample_grid(f, 16)
        np.testing.assert_array_equal(grid.evaluate(grid.nodes), grid.flat())


class SmoothGridTests(SimpleTestCase):
    def test_zero_sigma_is_identity(self):
        grid = sample_grid(make_taylor_green(Domain.unit(2)), 16)
        np.testing.assert_array_equal(smooth_grid(grid, 0).values, grid.values)

    def test_constant_preserved(self):
        grid = sample_grid(make_constant(Domain.unit(2), -1.5), 32)
        np.testing.assert_allclose(smooth_grid(grid, 3.0).values, -1.5, rtol=1e-13)

    def test_impulse_response(self):
        values = np.zeros((65, 65, 1))
        values[32, 32, 0] = 1.0
        grid = GridField(Domain.unit(2), (65, 65), values)
        peak = smooth_grid(grid, 4.0).values[32, 32, 0]
        self.assertAlmostEqual(peak / (1.0 / (2 * math.pi * 16)), 1.0, delta=0.02)

    def test_mean_preserved(self):
        grid = sample_grid(make_fourier_random(Domain.unit(2), 1.0, 16, seed=7), 128)
        smoothed = smooth_grid(grid, 8.0)
        scale = np.mean(np.abs(grid.values))
        self.assertAlmostEqual(
            (smoothed.values.mean() - grid.values.mean()) / scale, 0.0, delta=1e-10,
        )

    def test_rejects_negative_sigma(self):
        grid = sample_grid(make_taylor_green(Domain.unit(2)), 8)
        with self.assertRaises(ParameterError):
            smooth_grid(grid, -1.0)


class RoughnessTests(SimpleTestCase):
    def test_single_mode_roughness(self):
        grid = sample_grid(make_cosine_field(), 256)
        self.assertAlmostEqual(roughness(grid) / (2 * math.pi), 1.0, delta=0.01)

    def test_smoothing_decreases_roughness(self):
        grid = sample_grid(make_fourier_random(Domain.unit(2), 1.0, 16, seed=7), 128)
        values = [roughness(smooth_grid(grid, px)) for px in (0, 1, 4, 8)]
        for rougher, smoother in zip(values, values[1:]):
            self.assertLess(smoother, rougher)

    def test_impulse_on_constant(self):
        values = np.ones((16, 16, 1))
        values[8, 8, 0] = 2.0
        self.assertGreater(roughness(GridField(Domain.unit(2), (16, 16), values)), 0.0)

    def test_zero_field(self):
        grid = GridField(Domain.unit(2), (8, 8), np.zeros((8, 8, 1)))
        with self.assertRaises(UndefinedRatioError):
            roughness(grid)


class RelativeErrorTests(SimpleTestCase):
    def setUp(self):
        self.field = make_taylor_green(Domain.unit(2))
        self.rule = midpoint_rule(Domain.unit(2), 64)
        self.values = self.field.evaluate(self.rule.nodes)

    def test_identity(self):
        self.assertEqual(rel_l2_error(self.field, self.field, self.rule), 0.0)

    def test_zero_candidate(self):
        self.assertAlmostEqual(rel_l2_error(self.field, np.zeros_like(self.values), self.rule), 1.0, delta=1e-14)

    def test_scaling(self):
        self.assertAlmostEqual(rel_l2_error(self.values, 1.1 * self.values, self.rule), 0.1, delta=1e-12)

    def test_zero_reference(self):
        with self.assertRaises(UndefinedRatioError):
            rel_l2_error(np.zeros_like(self.values), self.values, self.rule)

    def test_channel_mismatch(self):
        with self.assertRaises(ParameterError):
            rel_l2_error(self.values, self.values[:, :1], self.rule)

    def test_quadrature_refinement_agrees(self):
        fields = [
            make_taylor_green(Domain.unit(2)),
            make_lamb_oseen(Domain.unit(2), 0.1),
            make_fourier_random(Domain.unit(2), 2.0, 8, seed=7),
        ]
        for f in fields:
            coarse, fine = midpoint_rule(Domain.unit(2)), midpoint_rule(Domain.unit(2), 256)
            shifted = lambda x, f=f: f.evaluate(x) + 0.05 * np.sin(x[:, :1] * 3.0)
            self.assertAlmostEqual(
                rel_l2_error(f, shifted, coarse) / rel_l2_error(f, shifted, fine), 1.0, delta=0.01,
            )

    def test_l2_norm_of_taylor_green(self):
        # ‖u‖² = ‖v‖² = 1/4, ‖p‖² = 1/16
        self.assertAlmostEqual(l2_norm(self.field, self.rule), math.sqrt(0.5 + 1 / 16), delta=1e-12)


class ContainerTests(SimpleTestCase):
    def setUp(self):
        self.grid = sample_grid(make_taylor_green(Domain((0.0, 0.0), (2.0, 1.0))), (6, 4))
        self.tmp = tempfile.mkdtemp()

    def test_binary_round_trip(self):
        path = os.path.join(self.tmp, 'tg.splf')
        container.write_grid(path, self.grid)
        loaded = container.read_grid(path)
        self.assertEqual(loaded.domain, self.grid.domain)
        self.assertEqual(loaded.resolution, (6, 4))
        np.testing.assert_array_equal(loaded.values, self.grid.values)

    def test_header_layout(self):
        payload = container.dumps(self.grid)
        self.assertEqual(payload[:4], b'SPLF')
        self.assertEqual(len(payload), 4 + 4 + 4 + 2 * 4 + 4 + 4 * 8 + 6 * 4 * 3 * 8)

    def test_rejects_truncated_payload(self):
        with self.assertRaises(ContainerFormatError):
            container.loads(container.dumps(self.grid)[:-8])
        with self.assertRaises(ContainerFormatError):
            container.loads(b'NOPE' + b'\x00' * 20)

    def test_csv_export(self):
        path = os.path.join(self.tmp, 'tg.csv')
        container.write_csv(path, self.grid)
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().splitlines()
        self.assertEqual(lines[0], 'x1,x2,c0,c1,c2')
        self.assertEqual(len(lines), 1 + 24)
