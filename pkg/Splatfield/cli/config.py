"""
Run configuration for the management commands.

A config file is flat `key=value` text: one pair per line, `#` starts a
comment (also after an unquoted value), blank lines are ignored and values
may be quoted. `-` and `_` are interchangeable in keys; list values are
comma separated. Lines are read with python-dotenv's parser, without variable
expansion. Values stay strings here; RunConfigSerializer does the typing and
range checks.

Precedence: command defaults < config file < explicit flags.
"""
import io
from dataclasses import asdict, dataclass
from pathlib import Path

from django.conf import settings
from dotenv.parser import parse_stream

from Splatfield.exceptions import ConfigFileError, ParameterError
from field.analytic import make_field
from field.domain import Domain
from field.quadrature import midpoint_rule
from sweep.experiments import power_of_two_grid

# Keys that never reach the config echo in output footers
NOT_ECHOED = frozenset({'out', 'json', 'svg', 'dump_dir', 'threads', 'csv'})


def normalize_key(key):
    return key.strip().lower().replace('-', '_')


def _line_of(binding):
    """First line of the binding itself; the parser's mark includes leading blank lines."""
    text = binding.original.string
    leading = text[:len(text) - len(text.lstrip())]
    return binding.original.line + leading.count('\n')


def parse_config(text, source='<config>', aliases=None):
    """Flat key=value text to a dict of normalized keys and string values.

    Keys listed in `aliases` are renamed after normalization, so a file may use
    a command's flag spelling for its config key.
    """
    aliases = aliases or {}
    values = {}
    for binding in parse_stream(io.StringIO(text)):
        if binding.error:
            raise ConfigFileError("expected 'key=value'", source, _line_of(binding))
        if binding.key is None:
            continue
        if binding.value is None:
            raise ConfigFileError("expected 'key=value'", source, _line_of(binding))
        key = normalize_key(binding.key)
        key = aliases.get(key, key)
        if key in values:
            raise ConfigFileError('duplicate key', source, _line_of(binding), key)
        values[key] = binding.value.strip()
    return values


def read_config(path, aliases=None):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigFileError(f'cannot read config file: {exc.strerror}', str(path)) from exc
    return parse_config(text, str(path), aliases)


def merge(defaults, file_values, flags):
    merged = dict(defaults)
    merged.update(file_values)
    merged.update({key: value for key, value in flags.items() if value is not None})
    return merged


@dataclass(frozen=True)
class RunConfig:
    # field
    field: str = 'taylor-green'
    s: float = 1.0
    modes: int = 16
    field_seed: int = None
    core_radius: float = 0.05
    # domain and quadrature
    d: int = 2
    lower: tuple = None
    upper: tuple = None
    resolution: int = None
    # centers / dictionary
    ks: tuple = None
    kmin: int = None
    kmax: int = None
    scale_factor: float = None
    weight: float = None
    # sensors and noise
    n: int = 64
    boundary: bool = False
    sigma_noise: float = 0.1
    noise_seed: int = None
    trials: int = None
    # oracle
    smooth_px: float = 0.0
    band_seeds: int = 0
    # capacity table
    s_values: tuple = None
    n_values: tuple = None
    norm: float = 1.0
    # outputs
    out: str = None
    json: str = None
    svg: str = None
    csv: str = None
    dump_dir: str = None
    threads: int = None
    seed: int = 42

    def domain(self):
        if self.lower is None and self.upper is None:
            return Domain.unit(self.d)
        lower = self.lower or (0.0,) * self.d
        upper = self.upper or (1.0,) * self.d
        if len(lower) != self.d or len(upper) != self.d:
            raise ParameterError(f'lower/upper need {self.d} entries')
        return Domain(tuple(lower), tuple(upper))

    @property
    def resolved_field_seed(self):
        return self.seed if self.field_seed is None else self.field_seed

    @property
    def resolved_noise_seed(self):
        return self.seed if self.noise_seed is None else self.noise_seed

    def make_field(self, seed_offset=0):
        return make_field(
            self.field, self.domain(), s=self.s, modes=self.modes,
            seed=self.resolved_field_seed + seed_offset, core_radius=self.core_radius,
        )

    def rule(self):
        return midpoint_rule(self.domain(), self.resolution)

    def k_grid(self, default=None):
        """Explicit K list, else powers of two between kmin and kmax."""
        if self.ks:
            return sorted(self.ks)
        lo, hi = default or settings.SPLATFIELD['K_GRID'][self.d]
        return power_of_two_grid(self.kmin or lo, self.kmax or hi)

    def echo(self):
        return {key: value for key, value in asdict(self).items() if key not in NOT_ECHOED and value is not None}
