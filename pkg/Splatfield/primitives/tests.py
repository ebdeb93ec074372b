import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, override_settings
from rest_framework.exceptions import ValidationError

from Splatfield import rng
from Splatfield.exceptions import DegenerateSupportError, DimensionError, ParameterError
from centers.sampling import grid_centers
from field.analytic import make_affine, make_constant, make_taylor_green
from field.domain import Domain
from field.metrics import rel_l2_error
from field.quadrature import midpoint_rule
from primitives import serializers
from primitives.scaffold import (
    PrimitiveSet, basis_eval, eval_scaffold, moment_sum, oracle_scaffold,
    shepard_weights,
)


def make_primitives(mu, sigma=0.1, theta=0.0, w=0.5, a=0.0, domain=None):
    domain = domain or Domain.unit(2)
    mu = np.atleast_2d(mu)
    a = np.broadcast_to(np.asarray(a, dtype=float), (len(mu),))
    return PrimitiveSet(domain, mu, sigma, theta, w, a)


def make_random_primitives(K=40, seed=3, channels=1):
    gen = rng.stream(seed, 'primitives-test')
    return PrimitiveSet(
        Domain.unit(2),
        gen.uniform(0.05, 0.95, size=(K, 2)),
        gen.uniform(0.05, 0.3, size=(K, 2)),
        gen.uniform(-np.pi, np.pi, size=K),
        gen.uniform(0.1, 0.9, size=K),
        gen.normal(size=(K, channels)),
    )


def floor_settings(value):
    return override_settings(SPLATFIELD={**settings.SPLATFIELD, 'DENOMINATOR_FLOOR': value})


class PrimitiveSetTests(SimpleTestCase):
    def test_scalar_parameters_broadcast(self):
        ps = make_primitives([[0.2, 0.2], [0.7, 0.4]])
        self.assertEqual(ps.sigma.shape, (2, 2))
        self.assertEqual(ps.a.shape, (2, 1))

    def test_scalar_amplitude_fills_every_primitive(self):
        ps = PrimitiveSet(Domain.unit(2), [[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]], 0.1, 0.0, 0.5, 1.5)
        np.testing.assert_array_equal(ps.a, np.full((3, 1), 1.5))

    def test_rejects_weight_outside_open_interval(self):
        with self.assertRaises(ParameterError):
            make_primitives([[0.5, 0.5]], w=1.0)

    def test_rejects_non_positive_scale(self):
        with self.assertRaises(ParameterError):
            make_primitives([[0.5, 0.5]], sigma=0.0)

    def test_rejects_rotation_in_three_dimensions(self):
        with self.assertRaises(DimensionError):
            PrimitiveSet(Domain.unit(3), [[0.5, 0.5, 0.5]], 0.1, 0.3, 0.5, [1.0])


class BasisEvalTests(SimpleTestCase):
    def test_peak_at_center(self):
        ps = make_primitives([[0.3, 0.6]])
        self.assertEqual(basis_eval(ps, [0.3, 0.6])[0], 1.0)

    def test_one_scale_away(self):
        ps = make_primitives([[0.3, 0.6]], sigma=0.2)
        self.assertAlmostEqual(basis_eval(ps, [0.5, 0.6])[0], math.exp(-0.5), delta=1e-15)

    def test_rotated_axes(self):
        ps = make_primitives([[0.5, 0.5]], sigma=[[0.1, 0.2]], theta=np.pi / 2)
        self.assertAlmostEqual(basis_eval(ps, [0.6, 0.5])[0], math.exp(-0.125), delta=1e-14)

    def test_matches_explicit_precision_matrix(self):
        ps = make_random_primitives()
        x = np.array([0.41, 0.77])
        phi = basis_eval(ps, x)
        for k in range(ps.size):
            c, s = math.cos(ps.theta[k]), math.sin(ps.theta[k])
            rotation = np.array([[c, -s], [s, c]])
            precision = rotation.T @ np.diag(ps.sigma[k] ** -2.0) @ rotation
            diff = x - ps.mu[k]
            self.assertAlmostEqual(phi[k], math.exp(-0.5 * diff @ precision @ diff), delta=1e-13)

    def test_swapped_axes_with_quarter_turn(self):
        ps = make_random_primitives()
        turned = PrimitiveSet(ps.domain, ps.mu, ps.sigma[:, ::-1], ps.theta + np.pi / 2, ps.w, ps.a)
        points = rng.stream(5, 'queries').uniform(size=(500, 2))
        np.testing.assert_allclose(basis_eval(turned, points), basis_eval(ps, points), rtol=0, atol=1e-12)


class ShepardWeightsTests(SimpleTestCase):
    def test_single_primitive(self):
        ps = make_primitives([[0.2, 0.3]])
        for x in ([0.1, 0.1], [0.9, 0.5]):
            self.assertAlmostEqual(shepard_weights(ps, x)[0], 1.0, delta=1e-12)

    def test_identical_primitives_split_evenly(self):
        ps = make_primitives([[0.4, 0.4], [0.4, 0.4]])
        np.testing.assert_allclose(shepard_weights(ps, [0.7, 0.1]), [0.5, 0.5], atol=1e-12)

    def test_weight_ratio_at_equidistant_point(self):
        ps = make_primitives([[0.3, 0.5], [0.7, 0.5]], w=[0.6, 0.3])
        np.testing.assert_allclose(shepard_weights(ps, [0.5, 0.2]), [2 / 3, 1 / 3], atol=1e-12)

    def test_partition_of_unity(self):
        ps = make_random_primitives()
        points = rng.stream(9, 'pou').uniform(size=(10_000, 2))
        psi = shepard_weights(ps, points)
        self.assertTrue(np.all(psi >= 0))
        self.assertLessEqual(np.abs(psi.sum(axis=1) - 1).max(), 1e-12)

    def test_large_floor_breaks_partition_of_unity(self):
        ps = make_random_primitives()
        with floor_settings(1.0):
            psi = shepard_weights(ps, [[0.5, 0.5]])
        self.assertGreater(abs(psi.sum() - 1), 1e-3)

    def test_underflow_reports_query_point(self):
        ps = make_primitives([[0.1, 0.1]], sigma=1e-6)
        with self.assertRaises(DegenerateSupportError) as ctx:
            shepard_weights(ps, [0.9, 0.9])
        self.assertEqual(ctx.exception.point, (0.9, 0.9))


class EvalScaffoldTests(SimpleTestCase):
    def test_uniform_amplitudes_reproduce_constant(self):
        ps = make_random_primitives().with_amplitudes(np.full((40, 1), 2.5))
        points = rng.stream(2, 'constant').uniform(size=(2000, 2))
        np.testing.assert_allclose(eval_scaffold(ps, points).values, 2.5, rtol=0, atol=1e-12)

    def test_single_primitive_is_constant(self):
        ps = PrimitiveSet(Domain.unit(2), [[0.5, 0.5]], 0.2, 0.0, 0.5, [[1.0, -2.0]])
        result = eval_scaffold(ps, [[0.1, 0.9], [0.5, 0.5]])
        np.testing.assert_allclose(result.values, [[1.0, -2.0], [1.0, -2.0]], atol=1e-12)
        self.assertAlmostEqual(result.mass[1], 0.5)

    def test_values_stay_in_amplitude_hull(self):
        ps = make_random_primitives(channels=3)
        values = eval_scaffold(ps, rng.stream(4, 'hull').uniform(size=(5000, 2))).values
        self.assertTrue(np.all(values >= ps.a.min(axis=0) - 1e-12))
        self.assertTrue(np.all(values <= ps.a.max(axis=0) + 1e-12))

    def test_order_independent(self):
        ps = make_random_primitives()
        points = rng.stream(8, 'order').uniform(size=(300, 2))
        forward = eval_scaffold(ps, points).values
        backward = eval_scaffold(ps, points[::-1]).values
        np.testing.assert_allclose(forward, backward[::-1], rtol=1e-14, atol=1e-15)


class OracleScaffoldTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.rule = midpoint_rule(self.domain)

    def oracle_error(self, field, K):
        return rel_l2_error(field, oracle_scaffold(field, grid_centers(self.domain, K)), self.rule)

    def test_constant_field_is_exact(self):
        self.assertLessEqual(self.oracle_error(make_constant(self.domain, 3.0), 64), 1e-12)

    def test_isotropic_scales_follow_fill_distance(self):
        cs = grid_centers(self.domain, 16)
        ps = oracle_scaffold(make_taylor_green(self.domain), cs, scale_factor=1.5)
        np.testing.assert_allclose(ps.sigma, 1.5 * cs.fill_distance)
        np.testing.assert_array_equal(ps.theta, 0.0)
        np.testing.assert_array_equal(ps.w, 0.5)
        self.assertEqual(ps.metadata['fill_distance'], cs.fill_distance)

    def test_amplitudes_sample_the_field(self):
        field = make_taylor_green(self.domain)
        cs = grid_centers(self.domain, 16)
        np.testing.assert_array_equal(oracle_scaffold(field, cs).a, field.evaluate(cs.centers))

    def test_taylor_green_improves_with_refinement(self):
        field = make_taylor_green(self.domain)
        self.assertLessEqual(self.oracle_error(field, 1024), self.oracle_error(field, 256))

    def test_affine_improves_with_refinement(self):
        field = make_affine(self.domain, [1.0, 0.0])
        self.assertLessEqual(self.oracle_error(field, 4096), self.oracle_error(field, 1024))

    def test_rejects_non_positive_scale_factor(self):
        with self.assertRaises(ParameterError):
            oracle_scaffold(make_taylor_green(self.domain), grid_centers(self.domain, 4), scale_factor=0.0)

    def test_tiny_scales_fail_mass_check(self):
        with self.assertRaises(DegenerateSupportError):
            oracle_scaffold(make_taylor_green(self.domain), grid_centers(self.domain, 4), scale_factor=1e-3)


class MomentSumTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.probe = midpoint_rule(self.domain, 128).nodes

    def test_zeroth_moment_is_one(self):
        ps = make_random_primitives()
        np.testing.assert_allclose(moment_sum(ps, self.probe[::97], 0), 1.0, atol=1e-12)

    def test_single_primitive_distance(self):
        ps = make_primitives([[0.5, 0.5]])
        self.assertAlmostEqual(moment_sum(ps, [0.8, 0.9], 2), 0.25, delta=1e-12)

    def test_negative_order_rejected(self):
        with self.assertRaises(ParameterError):
            moment_sum(make_primitives([[0.5, 0.5]]), [0.5, 0.5], -1)

    def test_moments_localize_at_fill_distance(self):
        field = make_constant(self.domain, 1.0)
        for m in (1, 2):
            scaled = []
            for K in (64, 256, 1024, 4096):
                cs = grid_centers(self.domain, K)
                ps = oracle_scaffold(field, cs)
                scaled.append(moment_sum(ps, self.probe, m).max() / cs.fill_distance ** m)
            self.assertLessEqual(max(scaled) / min(scaled), 2.0, msg=f'm={m}: {scaled}')


class PrimitiveSetJsonTests(SimpleTestCase):
    def test_round_trip_is_bit_exact(self):
        ps = make_random_primitives(channels=2)
        ps = PrimitiveSet(ps.domain, ps.mu, ps.sigma, ps.theta, ps.w, ps.a, {'scale_factor': 1.0})
        restored = serializers.loads(serializers.dumps(ps))
        for name in ('mu', 'sigma', 'theta', 'w', 'a'):
            np.testing.assert_array_equal(getattr(restored, name), getattr(ps, name))
        self.assertEqual(restored.domain, ps.domain)
        self.assertEqual(restored.metadata, {'scale_factor': 1.0})

    def test_mismatched_lengths_rejected(self):
        payload = serializers.dumps(make_primitives([[0.2, 0.2], [0.6, 0.6]]))
        payload = payload.replace(b'"w":["0x1.0000000000000p-1","0x1.0000000000000p-1"]', b'"w":["0x1.0000000000000p-1"]')
        with self.assertRaises(ValidationError):
            serializers.loads(payload)

    def test_decimal_numbers_accepted(self):
        payload = (
            b'{"domain":{"lower":[0,0],"upper":[1,1]},"mu":[[0.5,0.5]],"sigma":[[0.1,0.1]],'
            b'"theta":[0],"w":[0.5],"a":[[2.0]]}'
        )
        ps = serializers.loads(payload)
        self.assertEqual(ps.a[0, 0], 2.0)
