import csv
import json
import os
import tempfile
from io import StringIO

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from Splatfield.exceptions import ConfigFileError
from cli.config import RunConfig, merge, parse_config
from cli.selftest import check_interpolation_recovery, run_invariant_suite
from cli.serializers import RunConfigSerializer
from field import container


def make_config_file(directory, text, name='run.cfg'):
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(text)
    return path


def read_rows(path):
    with open(path, encoding='utf-8') as handle:
        lines = [line for line in handle if not line.startswith('#')]
    return list(csv.DictReader(lines))


def read_text(path):
    with open(path, encoding='utf-8') as handle:
        return handle.read()


def run(name, *args, **options):
    out, err = StringIO(), StringIO()
    call_command(name, *args, stdout=out, stderr=err, **options)
    return out.getvalue(), err.getvalue()


class ParseConfigTests(SimpleTestCase):
    def test_pairs_comments_and_blank_lines(self):
        values = parse_config('# oracle run\n\nfield = fourier-random\nsmooth-px=4\nks=16,32\n')
        self.assertEqual(values, {'field': 'fourier-random', 'smooth_px': '4', 'ks': '16,32'})

    def test_value_may_contain_equals(self):
        self.assertEqual(parse_config('out=a=b.csv'), {'out': 'a=b.csv'})

    def test_missing_equals_reports_line(self):
        with self.assertRaises(ConfigFileError) as ctx:
            parse_config('field=taylor-green\n\nkmin 16\n', 'run.cfg')
        self.assertEqual(ctx.exception.line, 3)
        self.assertIn('run.cfg:3', str(ctx.exception))

    def test_duplicate_key_reports_key(self):
        with self.assertRaises(ConfigFileError) as ctx:
            parse_config('seed=1\nseed=2\n')
        self.assertEqual((ctx.exception.line, ctx.exception.key), (2, 'seed'))

    def test_quoted_values_and_trailing_comments(self):
        values = parse_config('field="taylor-green"\nks=16,32 # coarse grid\n')
        self.assertEqual(values, {'field': 'taylor-green', 'ks': '16,32'})

    def test_key_without_value_reports_line(self):
        with self.assertRaises(ConfigFileError) as ctx:
            parse_config('seed=1\n\n\nkmin\n', 'run.cfg')
        self.assertEqual(ctx.exception.line, 4)

    def test_aliases_rename_flag_spellings(self):
        aliases = {'sigma': 'sigma_noise', 's': 's_values'}
        values = parse_config('sigma=0.2\ns=1,2\n', aliases=aliases)
        self.assertEqual(values, {'sigma_noise': '0.2', 's_values': '1,2'})

    def test_alias_and_config_key_collide(self):
        with self.assertRaises(ConfigFileError) as ctx:
            parse_config('sigma=0.2\nsigma-noise=0.3\n', aliases={'sigma': 'sigma_noise'})
        self.assertEqual((ctx.exception.line, ctx.exception.key), (2, 'sigma_noise'))

    def test_flags_override_file(self):
        merged = merge({'sigma_noise': 1.0}, {'sigma_noise': '0.5', 'n': '8'}, {'n': 16, 'seed': None})
        self.assertEqual(merged, {'sigma_noise': '0.5', 'n': 16})


class RunConfigSerializerTests(SimpleTestCase):
    def test_defaults(self):
        serializer = RunConfigSerializer(data={})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        cfg = serializer.save()
        self.assertIsInstance(cfg, RunConfig)
        self.assertEqual(cfg.seed, 42)
        self.assertEqual(cfg.resolved_field_seed, 42)
        self.assertEqual(cfg.resolved_noise_seed, 42)
        self.assertEqual(cfg.field, 'taylor-green')

    def test_unknown_key_rejected(self):
        serializer = RunConfigSerializer(data={'kmin': '16', 'colour': 'red'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('colour', serializer.errors)

    def test_comma_lists(self):
        serializer = RunConfigSerializer(data={'ks': '64, 16,32', 's_values': '1,2.5'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        cfg = serializer.save()
        self.assertEqual(cfg.k_grid(), [16, 32, 64])
        self.assertEqual(cfg.s_values, (1.0, 2.5))

    def test_power_of_two_grid(self):
        serializer = RunConfigSerializer(data={'kmin': 16, 'kmax': 4096})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(len(serializer.save().k_grid()), 9)

    def test_required_keys(self):
        serializer = RunConfigSerializer(data={}, context={'required': ('out',)})
        self.assertFalse(serializer.is_valid())
        self.assertIn('out', serializer.errors)

    def test_range_checks(self):
        for data in ({'d': 4}, {'sigma_noise': -1}, {'trials': 1}, {'kmin': 64, 'kmax': 16}, {'field': 'vortex'},
                     {'weight': 1.0}, {'weight': 0.0}):
            self.assertFalse(RunConfigSerializer(data=data).is_valid(), msg=str(data))

    def test_weight_below_one(self):
        serializer = RunConfigSerializer(data={'weight': '0.99'})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.save().weight, 0.99)

    def test_band_seeds_need_random_field(self):
        self.assertFalse(RunConfigSerializer(data={'band_seeds': 3}).is_valid())
        self.assertTrue(RunConfigSerializer(data={'band_seeds': 3, 'field': 'fourier-random'}).is_valid())

    def test_output_directory_must_exist(self):
        serializer = RunConfigSerializer(data={'out': '/nonexistent-dir/o.csv'})
        self.assertFalse(serializer.is_valid())
        self.assertIn('out', serializer.errors)

    def test_echo_skips_output_paths(self):
        serializer = RunConfigSerializer(data={'out': 'o.csv', 'threads': 4})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        echo = serializer.save().echo()
        self.assertNotIn('out', echo)
        self.assertNotIn('threads', echo)
        self.assertEqual(echo['seed'], 42)


class OracleSweepCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = os.path.join(self.tmp.name, 'oracle.csv')

    def sweep(self, **options):
        options = {'ks': [16, 32, 64], 'resolution': 32, 'out': self.out, **options}
        return run('oracle_sweep', **options)

    def test_writes_csv_json_and_prints_exponent(self):
        stdout, _ = self.sweep()
        rows = read_rows(self.out)
        self.assertEqual([row['K'] for row in rows], ['16', '32', '64'])
        self.assertIn('exponent=', stdout)
        summary = json.loads(read_text(os.path.join(self.tmp.name, 'oracle.json')))
        self.assertEqual(summary['tag'], 'oracle')
        self.assertLess(summary['fit']['exponent'], 0)

    def test_missing_out_is_a_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            run('oracle_sweep', ks=[16, 32, 64])
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('out', str(ctx.exception))

    def test_unknown_option_rejected(self):
        with self.assertRaises(TypeError):
            run('oracle_sweep', out=self.out, colour='red')

    def test_zero_smoothing_is_the_default(self):
        self.sweep()
        plain = read_text(self.out)
        self.sweep(smooth_px=0.0)
        self.assertEqual(read_text(self.out), plain)

    def test_identical_across_threads_and_reruns(self):
        self.sweep(threads=1)
        serial = read_text(self.out)
        self.sweep(threads=3)
        self.assertEqual(read_text(self.out), serial)
        self.sweep()
        self.assertEqual(read_text(self.out), serial)

    def test_config_file_and_flag_precedence(self):
        path = make_config_file(self.tmp.name, 'field=fourier-random\nks=16,32,64\nresolution=32\nfield-seed=3\n')
        run('oracle_sweep', config=path, field='taylor-green', out=self.out)
        footer = [line for line in read_text(self.out).splitlines() if line.startswith('#')]
        self.assertIn('# config.field=taylor-green', footer)
        self.assertIn('# config.field_seed=3', footer)
        self.assertIn('# config.ks=16,32,64', footer)

    def test_bad_config_line(self):
        path = make_config_file(self.tmp.name, 'ks=16,32\nresolution 32\n')
        with self.assertRaises(CommandError) as ctx:
            run('oracle_sweep', config=path, out=self.out)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('run.cfg:2', str(ctx.exception))

    def test_bad_config_value_names_key(self):
        path = make_config_file(self.tmp.name, 'trials=lots\n')
        with self.assertRaises(CommandError) as ctx:
            run('oracle_sweep', config=path, out=self.out)
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('trials', str(ctx.exception))

    def test_degenerate_support_exits_three(self):
        with self.assertRaises(CommandError) as ctx:
            self.sweep(scale_factor=1e-3)
        self.assertEqual(ctx.exception.returncode, 3)

    def test_seed_band_and_svg(self):
        svg = os.path.join(self.tmp.name, 'band.svg')
        stdout, _ = self.sweep(field='fourier-random', modes=8, band_seeds=3, svg=svg)
        rows = read_rows(self.out)
        self.assertEqual(rows[0]['seeds'], '3')
        self.assertIn('exponent over seeds', stdout)
        self.assertTrue(read_text(svg).startswith('<svg'))


class LsSweepCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = os.path.join(self.tmp.name, 'ls.csv')

    def sweep(self, **options):
        options = {
            'field': 'fourier-random', 'modes': 8, 'ks': [4, 8, 16], 'resolution': 32,
            'n': 64, 'trials': 20, 'out': self.out, **options,
        }
        return run('ls_sweep', **options)

    def test_noiseless_run(self):
        self.sweep(sigma_noise=0.0)
        for row in read_rows(self.out):
            self.assertLessEqual(float(row['noise_variance']), 1e-10)

    def test_prints_argmin_and_prediction(self):
        stdout, _ = self.sweep(sigma_noise=0.2)
        self.assertIn('argmin_k=', stdout)
        self.assertIn('optimal_k=', stdout)

    def test_same_seed_same_file(self):
        self.sweep(seed=7)
        first = read_text(self.out)
        self.sweep(seed=7)
        self.assertEqual(read_text(self.out), first)
        self.sweep(seed=8)
        self.assertNotEqual(read_text(self.out), first)

    def test_sparse_boundary_sensors_warn(self):
        _, stderr = self.sweep(boundary=True, n=8, ks=[16])
        self.assertIn('spectral stability fails at K=16', stderr)
        self.assertEqual(len(read_rows(self.out)), 1)

    def test_config_file_takes_flag_spelling(self):
        path = make_config_file(self.tmp.name, 'sigma=0\n')
        self.sweep(config=path)
        for row in read_rows(self.out):
            self.assertEqual(float(row['sigma_noise']), 0.0)
            self.assertLessEqual(float(row['noise_variance']), 1e-10)

    def test_dump_dir(self):
        self.sweep(dump_dir=self.tmp.name, ks=[4])
        gram = container.read_grid(os.path.join(self.tmp.name, 'gram_K4.splf'))
        self.assertEqual(gram.resolution, (4, 4))
        fit = json.loads(read_text(os.path.join(self.tmp.name, 'fit_K4.json')))
        self.assertEqual(len(fit['coefficients']), 4)
        self.assertEqual(sorted(fit), ['coefficients', 'condition', 'interpolatory', 'residual_norm', 'ridge'])


class ProjectionSweepCommandTests(SimpleTestCase):
    def test_writes_projection_table(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'projection.csv')
            stdout, _ = run('projection_sweep', ks=[16, 32, 64], resolution=32, out=out)
            rows = read_rows(out)
            self.assertEqual(list(rows[0]), ['K', 'h', 'cond_G', 'rel_l2'])
            self.assertIn('exponent=', stdout)


class OptkCommandTests(SimpleTestCase):
    def table_rows(self, stdout):
        return [line.split() for line in stdout.splitlines()[1:4]]

    def test_two_dimensional_defaults(self):
        stdout, _ = run('optk')
        rows = self.table_rows(stdout)
        self.assertEqual([row[1:5] for row in rows], [['2', '3', '4', '6'], ['2', '2', '3', '3'], ['1', '2', '2', '2']])

    def test_three_dimensional_defaults(self):
        stdout, _ = run('optk', d=3)
        rows = self.table_rows(stdout)
        self.assertEqual(stdout.splitlines()[0].split()[-7:-3], ['4', '8', '32', '128'])
        self.assertEqual([row[1:5] for row in rows], [['2', '3', '8', '18'], ['2', '2', '4', '8'], ['2', '2', '3', '5']])

    def test_unit_ratio(self):
        stdout, _ = run('optk', sigma_noise=2.0, n_values=[4], s_values=[1.0], d=2)
        self.assertEqual(stdout.splitlines()[1].split()[1], '1')

    def test_config_file_takes_flag_spelling(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = make_config_file(tmp, 's=1\nn=4\nsigma=2\n')
            stdout, _ = run('optk', config=path)
        self.assertEqual(stdout.splitlines()[1].split()[1], '1')
        self.assertEqual(stdout.splitlines()[0].split()[3], '4')

    def test_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'optk.csv')
            run('optk', csv=path)
            self.assertEqual(len(read_text(path).splitlines()), 13)

    def test_bad_ranges(self):
        for options in ({'sigma_noise': 0.0}, {'d': 1}, {'n_values': [0]}):
            with self.assertRaises(CommandError, msg=str(options)) as ctx:
                run('optk', **options)
            self.assertEqual(ctx.exception.returncode, 2)


class SelftestTests(SimpleTestCase):
    def test_clean_run_passes(self):
        stdout, _ = run('selftest')
        self.assertIn('PASS partition-of-unity', stdout)
        self.assertIn('PASS pythagorean-decomposition', stdout)
        self.assertNotIn('FAIL', stdout)

    def test_repeated_runs_match(self):
        self.assertEqual(run('selftest')[0], run('selftest')[0])

    def test_interpolation_recovery_fits_at_the_centers(self):
        passed, detail = check_interpolation_recovery()
        self.assertTrue(passed, detail)
        self.assertIn('N = K = 16', detail)

    def test_unexpected_exception_is_a_named_failure(self):
        def broken():
            return 1 / 0

        with self.assertLogs('cli.selftest', level='ERROR'):
            results = run_invariant_suite((('division', broken), ('gram-closed-form', lambda: (True, 'ok'))))
        self.assertEqual([result.passed for result in results], [False, True])
        self.assertIn('ZeroDivisionError', results[0].detail)

    def test_floor_fault_is_named(self):
        with override_settings(SPLATFIELD={**settings.SPLATFIELD, 'DENOMINATOR_FLOOR': 1.0}):
            with self.assertLogs('cli.selftest', level='WARNING'):
                results = run_invariant_suite()
            failed = {result.name for result in results if not result.passed}
            self.assertIn('partition-of-unity', failed)

            out = StringIO()
            with self.assertRaises(CommandError) as ctx:
                call_command('selftest', stdout=out, stderr=StringIO())
            self.assertEqual(ctx.exception.returncode, 1)
            self.assertIn('partition-of-unity', str(ctx.exception))
            self.assertIn('FAIL partition-of-unity', out.getvalue())


class FieldDumpTests(SimpleTestCase):
    def test_writes_container_and_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'tg.splf')
            stdout, _ = run('field_dump', resolution=16, out=out)
            grid = container.read_grid(out)
            self.assertEqual(grid.resolution, (16, 16))
            self.assertEqual(grid.channels, 3)
            csv_text = read_text(os.path.join(tmp, 'tg.csv')).splitlines()
            self.assertEqual(csv_text[0], 'x1,x2,c0,c1,c2')
            self.assertEqual(len(csv_text), 1 + 256)
            self.assertIn('roughness=', stdout)
