"""
Sample an analytic field on its quadrature grid and write it as an SPLF
container plus a CSV for plotting.

    python manage.py field_dump --field lamb-oseen --resolution 256 --out lamb.splf
"""
from pathlib import Path

from cli.base import ExperimentCommand
from field import container
from field.grid import roughness, sample_grid, smooth_grid


class Command(ExperimentCommand):
    help = 'Write a sampled field as an SPLF grid container and a CSV.'
    required = ('out',)

    def add_experiment_arguments(self, parser):
        self.add_field_arguments(parser)
        parser.add_argument('--smooth-px', type=float, help='Gaussian smoothing in pixels (default: 0).')
        parser.add_argument('--out', help='SPLF container path (required).')
        parser.add_argument('--csv', help='CSV path (default: --out with a .csv suffix).')

    def run(self, cfg):
        grid = sample_grid(cfg.make_field(), cfg.rule().resolution)
        grid = smooth_grid(grid, cfg.smooth_px)
        csv_path = cfg.csv or str(Path(cfg.out).with_suffix('.csv'))
        container.write_grid(cfg.out, grid)
        container.write_csv(csv_path, grid)
        self.stdout.write(f'wrote {cfg.out} and {csv_path}')
        self.stdout.write(f'resolution={"x".join(map(str, grid.resolution))} roughness={roughness(grid):.6g}')
