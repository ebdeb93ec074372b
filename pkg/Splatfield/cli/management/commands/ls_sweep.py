"""
Least-squares bias–variance K-sweep on fixed Gaussian dictionaries.

    python manage.py ls_sweep --field fourier-random --n 64 --sigma 0.1 --ks 4 8 16 32 --out ls.csv
"""
from django.conf import settings

from cli.base import ExperimentCommand
from sweep.experiments import ls_sweep


class Command(ExperimentCommand):
    help = 'Monte-Carlo bias, variance and total L2 risk of least squares over a K grid.'
    required = ('out',)
    config_aliases = {'sigma': 'sigma_noise'}

    def add_experiment_arguments(self, parser):
        self.add_field_arguments(parser)
        self.add_k_arguments(parser, settings.SPLATFIELD['LS_K_GRID'][0])
        parser.add_argument('--n', type=int, help='Number of sensors N (default: 64).')
        parser.add_argument('--sigma', dest='sigma_noise', type=float, help='Noise standard deviation (default: 0.1).')
        parser.add_argument(
            '--trials', type=int, help=f'Monte-Carlo trials (default: {settings.SPLATFIELD["MC_TRIALS"]}).',
        )
        parser.add_argument('--noise-seed', type=int, help='Noise seed (default: --seed).')
        parser.add_argument(
            '--boundary', action='store_true', default=None,
            help='Place sensors on the outer ring of quadrature cells (default: off).',
        )
        parser.add_argument(
            '--dump-dir',
            help='Write every Gram and design matrix as SPLF containers, and the noiseless fit as JSON, here.',
        )
        self.add_output_arguments(parser)

    def run(self, cfg):
        result = ls_sweep(
            cfg.make_field(), cfg.k_grid(settings.SPLATFIELD['LS_K_GRID']), cfg.n, cfg.sigma_noise,
            trials=cfg.trials, seed=cfg.resolved_noise_seed, rule=cfg.rule(),
            scale_factor=1.0 if cfg.scale_factor is None else cfg.scale_factor,
            boundary=cfg.boundary, threads=cfg.threads, config=cfg.echo(), dump_dir=cfg.dump_dir,
        )
        self.write_result(result, cfg, ('bias2', 'variance', 'total'))

        threshold = settings.SPLATFIELD['STABILITY_THRESHOLD']
        for row in result.rows:
            if row['c_low'] < threshold:
                self.stderr.write(self.style.WARNING(
                    f'warning: spectral stability fails at K={row["K"]}, N={row["N"]}: '
                    f'c_low={row["c_low"]:.3e} < {threshold}'
                ))

        summary = result.summary
        line = f'argmin_k={summary["argmin_k"]}'
        if 'k_star' in summary:
            line += f'  optimal_k={summary["k_star"]:.4g} (rounded {summary["k_star_rounded"]})'
        self.stdout.write(line)
