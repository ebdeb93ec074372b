"""
Shepard oracle K-sweep.

    python manage.py oracle_sweep --field taylor-green --kmin 16 --kmax 4096 --out oracle.csv
    python manage.py oracle_sweep --field fourier-random --smooth-px 4 --band-seeds 5 --out band.csv
"""
from cli.base import ExperimentCommand
from sweep.experiments import oracle_sweep, seed_band


class Command(ExperimentCommand):
    help = 'Relative L2 error of the Gaussian Shepard oracle over a K grid, with a log-log rate fit.'
    required = ('out',)

    def add_experiment_arguments(self, parser):
        self.add_field_arguments(parser)
        self.add_k_arguments(parser, 16)
        parser.add_argument('--weight', type=float, help='Uniform primitive weight w in (0, 1) (default: 0.5).')
        parser.add_argument('--smooth-px', type=float, help='Gaussian pre-smoothing of the truth in pixels (default: 0).')
        parser.add_argument(
            '--band-seeds', type=int,
            help='Repeat over this many field seeds and write mean/std rows (default: 0, off).',
        )
        self.add_output_arguments(parser)

    def run(self, cfg):
        rule = cfg.rule()
        Ks = cfg.k_grid()

        def sweep(field):
            return oracle_sweep(
                field, Ks, cfg.scale_factor, cfg.smooth_px, rule, cfg.threads, cfg.echo(), weight=cfg.weight,
            )

        if cfg.band_seeds:
            results = [sweep(cfg.make_field(offset)) for offset in range(cfg.band_seeds)]
            result = seed_band(results)
            self.write_result(result, cfg, ('mean',))
            if 'exponent_mean' in result.summary:
                self.stdout.write(
                    f'exponent over seeds: {result.summary["exponent_mean"]:.6g} '
                    f'± {result.summary["exponent_std"]:.3g}'
                )
        else:
            self.write_result(sweep(cfg.make_field()), cfg)
