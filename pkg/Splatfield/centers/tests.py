import math
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from Splatfield import rng
from Splatfield.exceptions import DegeneracyError, SizeError
from centers.sampling import (
    build_center_set, farthest_point_sample, fill_distance, grid_centers,
    lattice_shape, separation_radius,
)
from field.domain import Domain
from field.quadrature import midpoint_rule


def make_candidate_grid(n=128):
    return Domain.unit(2).cell_centers(n)


class FarthestPointSampleTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.candidates = [(0.1, 0.1), (0.5, 0.5), (0.9, 0.9)]

    def test_first_pick_nearest_centroid(self):
        cs = farthest_point_sample(self.candidates, 1, self.domain)
        np.testing.assert_array_equal(cs.centers, [[0.5, 0.5]])

    def test_tie_goes_to_lowest_index(self):
        cs = farthest_point_sample(self.candidates, 2, self.domain)
        np.testing.assert_array_equal(cs.centers[1], [0.1, 0.1])
        self.assertEqual(list(cs.indices), [1, 0])

    def test_prefixes_are_nested(self):
        candidates = make_candidate_grid(32)
        long_run = farthest_point_sample(candidates, 64, self.domain)
        for K in (1, 5, 16, 63):
            short_run = farthest_point_sample(candidates, K, self.domain)
            np.testing.assert_array_equal(short_run.centers, long_run.centers[:K])

    def test_quasi_uniform_on_dense_grid(self):
        cs = farthest_point_sample(make_candidate_grid(), 64, self.domain)
        self.assertGreater(cs.separation, 0.0)
        self.assertLessEqual(cs.ratio, 4.0)

    def test_ratio_bounded_across_sweep(self):
        full = farthest_point_sample(make_candidate_grid(), 4096, self.domain)
        for K in (16, 64, 256, 1024, 4096):
            self.assertLessEqual(full.prefix(K).ratio, 4.0, msg=f'K={K}')

    def test_too_many_requested(self):
        with self.assertRaises(SizeError):
            farthest_point_sample(self.candidates, 4, self.domain)

    def test_duplicate_candidates_exhaust(self):
        with self.assertRaises(DegeneracyError):
            farthest_point_sample([(0.2, 0.2), (0.2, 0.2)], 2, self.domain)


class GridCentersTests(SimpleTestCase):
    def test_two_by_two_lattice(self):
        cs = grid_centers(Domain.unit(2), 4)
        np.testing.assert_allclose(
            cs.centers, [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]], atol=1e-15,
        )

    def test_exact_lattice_geometry(self):
        for n in (2, 4, 8, 16, 32):
            cs = grid_centers(Domain.unit(2), n * n)
            self.assertAlmostEqual(cs.fill_distance, math.sqrt(2) / (2 * n), delta=1e-15)
            self.assertAlmostEqual(cs.separation, 1 / (2 * n), delta=1e-14)
            self.assertAlmostEqual(cs.ratio, math.sqrt(2), delta=1e-12)

    def test_fill_distance_scales_like_inverse_root(self):
        scaled = [grid_centers(Domain.unit(2), K).fill_distance * math.sqrt(K)
                  for K in (4, 16, 64, 256, 1024)]
        for value in scaled:
            self.assertAlmostEqual(value, scaled[0], delta=1e-12)

    def test_truncation_keeps_lowest_cells(self):
        shape = lattice_shape(5, 2)
        self.assertEqual(shape, (3, 2))
        cs = grid_centers(Domain.unit(2), 5)
        self.assertEqual(cs.size, 5)
        np.testing.assert_allclose(cs.centers[:3, 1], 0.25)

    def test_cube_lattice_shape(self):
        self.assertEqual(lattice_shape(27, 3), (3, 3, 3))
        self.assertEqual(lattice_shape(64, 3), (4, 4, 4))


class FillDistanceTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)
        self.probe = midpoint_rule(self.domain, 64)

    def test_single_center_reaches_corner(self):
        cs = build_center_set(self.domain, [[0.5, 0.5]], probe=self.probe)
        diagonal = math.sqrt(2) / 64
        self.assertLessEqual(math.sqrt(2) / 2 - cs.fill_distance, diagonal)
        self.assertEqual(cs.ratio, 0.0)

    def test_probe_matches_lattice_value(self):
        cs = grid_centers(self.domain, 16)
        probed = fill_distance(cs, self.probe)
        self.assertLessEqual(abs(probed - math.sqrt(2) / 8), math.sqrt(2) / 64)

    def test_adding_centers_never_increases(self):
        gen = rng.stream(11, 'fill-distance-test')
        points = gen.uniform(0.01, 0.99, size=(40, 2))
        previous = math.inf
        for K in range(1, 41):
            value = fill_distance(build_center_set(self.domain, points[:K], probe=self.probe), self.probe)
            self.assertLessEqual(value, previous)
            previous = value

    def test_coarse_probe_rejected(self):
        cs = grid_centers(self.domain, 4)
        with self.assertRaises(SizeError):
            fill_distance(cs, midpoint_rule(self.domain, 16))


class SeparationRadiusTests(SimpleTestCase):
    def setUp(self):
        self.domain = Domain.unit(2)

    def test_two_centers(self):
        cs = build_center_set(self.domain, [[0.25, 0.5], [0.75, 0.5]])
        self.assertAlmostEqual(separation_radius(cs), 0.25, delta=1e-15)

    def test_single_center(self):
        cs = build_center_set(self.domain, [[0.5, 0.5]])
        with self.assertRaises(SizeError):
            separation_radius(cs)

    def test_duplicates(self):
        with self.assertRaises(DegeneracyError):
            build_center_set(self.domain, [[0.3, 0.3], [0.3, 0.3]])


class CenterCsvTests(SimpleTestCase):
    def test_export(self):
        path = os.path.join(tempfile.mkdtemp(), 'centers.csv')
        grid_centers(Domain.unit(2), 4).to_csv(path)
        with open(path, encoding='utf-8') as handle:
            lines = handle.read().splitlines()
        self.assertTrue(lines[0].startswith('# h='))
        self.assertTrue(lines[2].startswith('# rho='))
        self.assertEqual(lines[3], 'x1,x2')
        self.assertEqual(len(lines), 8)
