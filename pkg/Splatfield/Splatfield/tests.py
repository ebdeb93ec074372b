import numpy as np
from django.test import SimpleTestCase

from Splatfield import rng

# Philox4x64-10 at counter 0, key 0 (Random123 known answer)
PHILOX_ZERO_BLOCK = [0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B]

# stream(42, 'noise', 0): key = (0x8D18E14DAC0D8490 << 64) | 42, counter 1
NOISE_STREAM_WORDS = [9948655587134599575, 12718923373353359844, 840542664776707270, 4192256485126507752]


class StreamIdTests(SimpleTestCase):
    def test_blake2b_of_joined_labels(self):
        self.assertEqual(rng.stream_id('noise', 0), 0x8D18E14DAC0D8490)
        self.assertEqual(rng.stream_id('noise', 0), rng.stream_id('noise/0'))

    def test_no_labels(self):
        self.assertEqual(rng.stream_id(), 0)


class StreamTests(SimpleTestCase):
    def test_philox_block_function(self):
        # numpy bumps the counter before each block, so all-ones wraps to zero
        bits = np.random.Philox(key=0, counter=2**256 - 1)
        self.assertEqual(bits.random_raw(4).tolist(), PHILOX_ZERO_BLOCK)

    def test_pinned_raw_words(self):
        self.assertEqual(rng.stream(42, 'noise', 0).bit_generator.random_raw(4).tolist(), NOISE_STREAM_WORDS)

    def test_pinned_uniforms(self):
        draws = rng.stream(42, 'noise', 0).random(2)
        expected = [(word >> 11) * 2.0 ** -53 for word in NOISE_STREAM_WORDS[:2]]
        self.assertEqual(draws.tolist(), expected)
        self.assertEqual(draws[0], 0.5393177000440692)

    def test_same_key_same_draws(self):
        first = rng.stream(7, 'fourier', 0).standard_normal(16)
        second = rng.stream(7, 'fourier', 0).standard_normal(16)
        np.testing.assert_array_equal(first, second)

    def test_labels_and_seeds_separate_streams(self):
        base = rng.stream(7, 'fourier', 0).random(4)
        for other in (rng.stream(7, 'fourier', 1), rng.stream(8, 'fourier', 0), rng.stream(7, 'noise', 0)):
            self.assertFalse(np.array_equal(base, other.random(4)))

    def test_seed_wraps_at_64_bits(self):
        np.testing.assert_array_equal(rng.stream(-1, 'noise').random(4), rng.stream(2**64 - 1, 'noise').random(4))


class DeriveSeedTests(SimpleTestCase):
    def test_deterministic_and_bounded(self):
        seed = rng.derive_seed(42, 'row', 16)
        self.assertEqual(seed, rng.derive_seed(42, 'row', 16))
        self.assertTrue(0 <= seed < 2**63 - 1)

    def test_labels_give_distinct_children(self):
        children = {rng.derive_seed(42, 'row', K) for K in (4, 8, 16, 32)}
        self.assertEqual(len(children), 4)
