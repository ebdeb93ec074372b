"""
Sweep tables and their CSV / JSON / SVG renderings.

CSV floats use 17 significant digits so baselines round-trip exactly.
Footer lines start with '#' and carry the rate fit, the configuration echo
and the library version.
"""
import csv
import io
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from rest_framework import serializers
from rest_framework.renderers import JSONRenderer

import Splatfield
from Splatfield.exceptions import ParameterError

FLOAT_FORMAT = '%.17g'

ORACLE_COLUMNS = ('K', 'h', 'q', 'rho', 'smooth_px', 'rel_l2')
LS_COLUMNS = (
    'K', 'h', 'N', 'sigma_noise', 'trials', 'bias2', 'variance', 'total', 'c_low', 'c_high',
    'noise_variance', 'noise_variance_theory', 'aliasing', 'total_se', 'residual_ratio',
)
PROJECTION_COLUMNS = ('K', 'h', 'cond_G', 'rel_l2')
BAND_COLUMNS = ('K', 'h', 'mean', 'std', 'seeds')


def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FLOAT_FORMAT % float(value)


@dataclass
class SweepResult:
    tag: str
    columns: tuple
    rows: list
    error_column: str = None
    fit: object = None
    degenerate: bool = False
    config: dict = dataclass_field(default_factory=dict)
    summary: dict = dataclass_field(default_factory=dict)

    def __post_init__(self):
        Ks = [row['K'] for row in self.rows]
        if any(b <= a for a, b in zip(Ks, Ks[1:])):
            raise ParameterError('sweep rows must have strictly increasing K')

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    @property
    def Ks(self):
        return self.column('K')

    # -------------------------------------------------------------------------
    # CSV
    # -------------------------------------------------------------------------

    def footer(self):
        lines = [f'experiment={self.tag}']
        if self.fit is not None:
            lines += [
                f'exponent={format_value(self.fit.exponent)}',
                f'intercept={format_value(self.fit.intercept)}',
                f'r_squared={format_value(self.fit.r_squared)}',
            ]
        elif self.degenerate:
            lines.append('rate_fit=skipped (degenerate errors)')
        for key in sorted(self.summary):
            lines.append(f'{key}={_echo(self.summary[key])}')
        for key in sorted(self.config):
            lines.append(f'config.{key}={_echo(self.config[key])}')
        lines.append(f'version={Splatfield.__version__}')
        return lines

    def csv_text(self):
        buffer = io.StringIO(newline='')
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_value(row[name]) for name in self.columns])
        for line in self.footer():
            buffer.write(f'# {line}\n')
        return buffer.getvalue()

    def write_csv(self, path):
        with open(path, 'w', newline='', encoding='utf-8') as handle:
            handle.write(self.csv_text())

    # -------------------------------------------------------------------------
    # JSON
    # -------------------------------------------------------------------------

    def json_bytes(self):
        return JSONRenderer().render(SweepResultSerializer(self).data)

    def write_json(self, path):
        with open(path, 'wb') as handle:
            handle.write(self.json_bytes())

    # -------------------------------------------------------------------------
    # SVG
    # -------------------------------------------------------------------------

    def svg_text(self, columns=None, width=480, height=320):
        """Log-log line plot of the given columns against K."""
        columns = columns or (self.error_column,)
        margin = 48
        Ks = self.Ks.astype(float)
        series = {name: self.column(name).astype(float) for name in columns}
        positive = np.concatenate([values[values > 0] for values in series.values()] + [np.array([1.0])])
        x_lo, x_hi = math.log10(Ks.min()), math.log10(max(Ks.max(), Ks.min() * 10))
        y_lo, y_hi = math.log10(positive.min()), math.log10(positive.max())
        if y_hi - y_lo < 1e-12:
            y_lo, y_hi = y_lo - 1, y_hi + 1

        def sx(k):
            return margin + (math.log10(k) - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

        def sy(v):
            return height - margin - (math.log10(v) - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

        colors = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd')
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
            f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" height="{height - 2 * margin}" '
            f'fill="none" stroke="#444"/>',
            f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">K</text>',
        ]
        for index, (name, values) in enumerate(series.items()):
            points = ' '.join(f'{sx(k):.2f},{sy(v):.2f}' for k, v in zip(Ks, values) if v > 0)
            color = colors[index % len(colors)]
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            parts.append(
                f'<text x="{width - margin - 4}" y="{margin + 14 * (index + 1)}" text-anchor="end" '
                f'font-size="11" fill="{color}">{name}</text>'
            )
        if self.fit is not None:
            parts.append(
                f'<text x="{margin + 4}" y="{margin - 8}" font-size="11">p = {self.fit.exponent:.3f}</text>'
            )
        parts.append('</svg>')
        return '\n'.join(parts) + '\n'

    def write_svg(self, path, columns=None):
        with open(path, 'w', newline='\n', encoding='utf-8') as handle:
            handle.write(self.svg_text(columns))


def _echo(value):
    if isinstance(value, (list, tuple)):
        return ','.join(_echo(v) for v in value)
    if value is None:
        return ''
    if isinstance(value, float):
        return format_value(value)
    return str(value)


# =============================================================================
# SERIALIZERS
# =============================================================================

class RateFitSerializer(serializers.Serializer):
    exponent = serializers.FloatField()
    intercept = serializers.FloatField()
    r_squared = serializers.FloatField()


class SweepResultSerializer(serializers.Serializer):
    tag = serializers.CharField()
    columns = serializers.ListField(child=serializers.CharField())
    rows = serializers.SerializerMethodField()
    fit = RateFitSerializer(allow_null=True)
    degenerate = serializers.BooleanField()
    config = serializers.SerializerMethodField()
    summary = serializers.SerializerMethodField()
    version = serializers.SerializerMethodField()

    def get_rows(self, obj):
        return [{name: _json_value(row[name]) for name in obj.columns} for row in obj.rows]

    def get_config(self, obj):
        return {key: _json_value(value) for key, value in sorted(obj.config.items())}

    def get_summary(self, obj):
        return {key: _json_value(value) for key, value in sorted(obj.summary.items())}

    def get_version(self, obj):
        return Splatfield.__version__


def _json_value(value):
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    if isinstance(value, (np.integer, bool, np.bool_)):
        return value.item() if hasattr(value, 'item') else value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value
