"""
Shared plumbing for the experiment management commands.

Exit codes: 0 success, 1 selftest failure, 2 configuration error, 3
numerical degeneracy.
"""
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from Splatfield.exceptions import NumericalDegeneracyError, SplatfieldError
from .config import merge, read_config
from .serializers import RunConfigSerializer, format_errors

logger = logging.getLogger(__name__)

CONFIG_ERROR = 2
DEGENERACY_ERROR = 3


def json_path(cfg):
    """Explicit --json, else the CSV path with a .json suffix."""
    return cfg.json or str(Path(cfg.out).with_suffix('.json'))


class ExperimentCommand(BaseCommand):
    # Keys the command must have after merging, and its own defaults
    required = ()
    defaults = {}
    # Flag spellings accepted as config-file keys, mapped to their config key
    config_aliases = {}

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Flat key=value file; explicit flags override its values.')
        parser.add_argument(
            '--threads', type=int,
            help=f'Worker threads for sweep rows (default: SPLATFIELD_THREADS or {settings.SPLATFIELD["THREADS"]}).',
        )
        self.add_experiment_arguments(parser)

    def add_experiment_arguments(self, parser):
        pass

    def add_field_arguments(self, parser):
        parser.add_argument('--field', help='taylor-green | lamb-oseen | fourier-random (default: taylor-green).')
        parser.add_argument('--s', type=float, help='Sobolev smoothness of fourier-random (default: 1.0).')
        parser.add_argument('--modes', type=int, help='Fourier modes per axis (default: 16).')
        parser.add_argument('--field-seed', type=int, help='Field seed (default: --seed).')
        parser.add_argument('--core-radius', type=float, help='Lamb-Oseen core radius (default: 0.05).')
        parser.add_argument('--d', type=int, help='Dimension, 2 or 3 (default: 2).')
        parser.add_argument('--resolution', type=int, help='Quadrature nodes per axis (default: 128 in 2D, 48 in 3D).')
        parser.add_argument('--seed', type=int, help='Global seed (default: 42).')

    def add_k_arguments(self, parser, default_grid):
        parser.add_argument('--ks', type=int, nargs='+', help='Explicit K list.')
        parser.add_argument('--kmin', type=int, help=f'Smallest K of the power-of-two grid (default: {default_grid}).')
        parser.add_argument('--kmax', type=int, help='Largest K of the power-of-two grid.')
        parser.add_argument('--scale-factor', type=float, help='Scale factor c_sigma, sigma = c_sigma * h_K (default: 1.0).')

    def add_output_arguments(self, parser):
        parser.add_argument('--out', help='CSV output path (required).')
        parser.add_argument('--json', help='JSON summary path (default: --out with a .json suffix).')
        parser.add_argument('--svg', help='Optional log-log SVG plot path.')

    # -------------------------------------------------------------------------

    def load_config(self, options):
        file_values = {}
        try:
            if options.get('config'):
                file_values = read_config(options['config'], self.config_aliases)
        except SplatfieldError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc

        flags = {key: options.get(key) for key in RunConfigSerializer().fields if key in options}
        serializer = RunConfigSerializer(
            data=merge(self.defaults, file_values, flags), context={'required': self.required},
        )
        if not serializer.is_valid():
            source = options.get('config') or 'command line'
            raise CommandError(f'{source}: {format_errors(serializer.errors)}', returncode=CONFIG_ERROR)
        return serializer.save()

    def handle(self, *args, **options):
        cfg = self.load_config(options)
        try:
            self.run(cfg)
        except NumericalDegeneracyError as exc:
            logger.error(f'{type(exc).__name__}: {exc}')
            raise CommandError(f'numerical degeneracy: {exc}', returncode=DEGENERACY_ERROR) from exc
        except SplatfieldError as exc:
            raise CommandError(str(exc), returncode=CONFIG_ERROR) from exc

    def run(self, cfg):
        raise NotImplementedError

    def write_result(self, result, cfg, columns=None):
        result.write_csv(cfg.out)
        result.write_json(json_path(cfg))
        if cfg.svg:
            result.write_svg(cfg.svg, columns)
        self.stdout.write(f'wrote {cfg.out}')
        if result.fit is not None:
            self.stdout.write(self.style.SUCCESS(
                f'exponent={result.fit.exponent:.6g} r_squared={result.fit.r_squared:.6g}'
            ))
        elif result.degenerate:
            self.stdout.write(self.style.WARNING('rate fit skipped: degenerate errors'))
