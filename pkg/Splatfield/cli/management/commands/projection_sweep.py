from cli.base import ExperimentCommand
from sweep.experiments import projection_sweep


class Command(ExperimentCommand):
    help = 'Best L2 projection error of fixed-center Gaussian dictionaries over a K grid.'
    required = ('out',)

    def add_experiment_arguments(self, parser):
        self.add_field_arguments(parser)
        self.add_k_arguments(parser, 16)
        self.add_output_arguments(parser)

    def run(self, cfg):
        result = projection_sweep(
            cfg.make_field(), cfg.k_grid((16, 1024)),
            scale_factor=1.0 if cfg.scale_factor is None else cfg.scale_factor,
            rule=cfg.rule(), threads=cfg.threads, config=cfg.echo(),
        )
        self.write_result(result, cfg)
