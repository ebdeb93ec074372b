"""
Capacity table: optimal primitive count K* = (N/sigma^2)^(d/(2s+d)) per (s, N).

    python manage.py optk
    python manage.py optk --d 3 --csv optk3.csv
"""
from cli.base import ExperimentCommand
from sweep.experiments import optk_table

DEFAULT_S = (1.0, 2.0, 3.0)
DEFAULT_N = {2: (4, 8, 16, 32), 3: (4, 8, 32, 128)}


class Command(ExperimentCommand):
    help = 'Print the optimal-K capacity table with its rate exponents.'
    defaults = {'sigma_noise': 1.0}
    config_aliases = {'sigma': 'sigma_noise', 's': 's_values', 'n': 'n_values'}

    def add_experiment_arguments(self, parser):
        parser.add_argument('--d', type=int, help='Dimension, 2 or 3 (default: 2).')
        parser.add_argument('--s', dest='s_values', type=float, nargs='+', help='Smoothness values (default: 1 2 3).')
        parser.add_argument(
            '--n', dest='n_values', type=int, nargs='+',
            help='Sensor counts (default: 4 8 16 32 for d=2, 4 8 32 128 for d=3).',
        )
        parser.add_argument('--sigma', dest='sigma_noise', type=float, help='Noise standard deviation (default: 1.0).')
        parser.add_argument('--norm', type=float, help='Field-norm factor (default: 1.0).')
        parser.add_argument('--csv', help='Also write the table as CSV.')

    def run(self, cfg):
        table = optk_table(
            cfg.d, cfg.s_values or DEFAULT_S, cfg.n_values or DEFAULT_N[cfg.d],
            sigma_noise=cfg.sigma_noise, field_norm=cfg.norm,
        )
        self.stdout.write(table.text(), ending='')
        if cfg.csv:
            with open(cfg.csv, 'w', newline='\n', encoding='utf-8') as handle:
                handle.write(table.csv_text())
            self.stdout.write(f'wrote {cfg.csv}')
