import os
from pathlib import Path

from rest_framework import serializers

from field.analytic import FOURIER_RANDOM, LAMB_OSEEN, TAYLOR_GREEN
from .config import RunConfig


class CommaListField(serializers.ListField):
    """A list field that also takes 'a,b,c' strings from config files."""

    def to_internal_value(self, data):
        if isinstance(data, str):
            data = [part.strip() for part in data.split(',') if part.strip()]
        return tuple(super().to_internal_value(data))


class OutputPathField(serializers.CharField):
    def to_internal_value(self, data):
        path = super().to_internal_value(data)
        parent = Path(path).resolve().parent
        if not parent.is_dir():
            raise serializers.ValidationError(f'directory {parent} does not exist')
        if not os.access(parent, os.W_OK):
            raise serializers.ValidationError(f'directory {parent} is not writable')
        return path


def _optional(field_class, **kwargs):
    return field_class(required=False, allow_null=True, default=None, **kwargs)


class RunConfigSerializer(serializers.Serializer):
    field = serializers.ChoiceField(choices=[TAYLOR_GREEN, LAMB_OSEEN, FOURIER_RANDOM], default=TAYLOR_GREEN)
    s = serializers.FloatField(default=1.0, min_value=1e-9)
    modes = serializers.IntegerField(default=16, min_value=1)
    field_seed = _optional(serializers.IntegerField, min_value=0)
    core_radius = serializers.FloatField(default=0.05, min_value=1e-9)

    d = serializers.IntegerField(default=2, min_value=2, max_value=3)
    lower = _optional(CommaListField, child=serializers.FloatField())
    upper = _optional(CommaListField, child=serializers.FloatField())
    resolution = _optional(serializers.IntegerField, min_value=2)

    ks = _optional(CommaListField, child=serializers.IntegerField(min_value=1), allow_empty=False)
    kmin = _optional(serializers.IntegerField, min_value=1)
    kmax = _optional(serializers.IntegerField, min_value=1)
    scale_factor = _optional(serializers.FloatField, min_value=1e-9)
    weight = _optional(serializers.FloatField, min_value=1e-9)

    n = serializers.IntegerField(default=64, min_value=1)
    boundary = serializers.BooleanField(default=False)
    sigma_noise = serializers.FloatField(default=0.1, min_value=0.0)
    noise_seed = _optional(serializers.IntegerField, min_value=0)
    trials = _optional(serializers.IntegerField, min_value=2)

    smooth_px = serializers.FloatField(default=0.0, min_value=0.0)
    band_seeds = serializers.IntegerField(default=0, min_value=0)

    s_values = _optional(CommaListField, child=serializers.FloatField(min_value=1e-9), allow_empty=False)
    n_values = _optional(CommaListField, child=serializers.IntegerField(min_value=1), allow_empty=False)
    norm = serializers.FloatField(default=1.0, min_value=1e-300)

    out = _optional(OutputPathField)
    json = _optional(OutputPathField)
    svg = _optional(OutputPathField)
    csv = _optional(OutputPathField)
    dump_dir = _optional(serializers.CharField)
    threads = _optional(serializers.IntegerField, min_value=1)
    seed = serializers.IntegerField(default=42, min_value=0)

    def validate_weight(self, value):
        if value is not None and value >= 1.0:
            raise serializers.ValidationError('Ensure this value is less than 1.')
        return value

    def validate_dump_dir(self, value):
        if value is not None and not Path(value).is_dir():
            raise serializers.ValidationError(f'directory {value} does not exist')
        return value

    def validate(self, attrs):
        unknown = sorted(set(self.initial_data) - set(self.fields))
        if unknown:
            raise serializers.ValidationError({key: 'Unknown configuration key.' for key in unknown})

        missing = [key for key in self.context.get('required', ()) if attrs.get(key) is None]
        if missing:
            raise serializers.ValidationError({key: 'This field is required.' for key in missing})

        if attrs.get('kmin') and attrs.get('kmax') and attrs['kmin'] > attrs['kmax']:
            raise serializers.ValidationError({'kmax': 'kmax must be >= kmin.'})
        if attrs['band_seeds'] and attrs['field'] != FOURIER_RANDOM:
            raise serializers.ValidationError({'band_seeds': 'Seed bands need the fourier-random field.'})
        for key in ('lower', 'upper'):
            if attrs.get(key) is not None and len(attrs[key]) != attrs['d']:
                raise serializers.ValidationError({key: f'Expected {attrs["d"]} coordinates.'})
        return attrs

    def create(self, validated_data):
        return RunConfig(**validated_data)


def format_errors(errors):
    """Flatten serializer errors into 'key: message' diagnostics."""
    parts = []
    for key, messages in sorted(errors.items()):
        if isinstance(messages, dict):
            messages = [f'[{index}] {" ".join(map(str, text))}' for index, text in messages.items()]
        parts.append(f'{key}: {" ".join(str(message) for message in messages)}')
    return '; '.join(parts)
