import io

import numpy as np
from rest_framework import serializers
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from Splatfield.exceptions import ParameterError
from field.domain import Domain
from .scaffold import PrimitiveSet


# =============================================================================
# FIELDS
# =============================================================================

class HexFloatField(serializers.Field):
    """A double written as float.hex() so it round-trips bit-exactly.

    Plain JSON numbers are accepted on input as well.
    """

    default_error_messages = {
        'invalid': 'A hex-float string or a number is required.',
        'not_finite': 'Value must be finite.',
    }

    def to_representation(self, value):
        return float(value).hex()

    def to_internal_value(self, data):
        try:
            value = float.fromhex(data) if isinstance(data, str) else float(data)
        except (TypeError, ValueError):
            self.fail('invalid')
        if not np.isfinite(value):
            self.fail('not_finite')
        return value


def hex_vector(**kwargs):
    return serializers.ListField(child=HexFloatField(), allow_empty=False, **kwargs)


def hex_matrix(**kwargs):
    return serializers.ListField(child=hex_vector(), allow_empty=False, **kwargs)


# =============================================================================
# PRIMITIVES
# =============================================================================

class DomainSerializer(serializers.Serializer):
    lower = hex_vector()
    upper = hex_vector()

    def validate(self, attrs):
        try:
            attrs['domain'] = Domain(tuple(attrs['lower']), tuple(attrs['upper']))
        except ParameterError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class PrimitiveSetSerializer(serializers.Serializer):
    domain = DomainSerializer()
    mu = hex_matrix()
    sigma = hex_matrix()
    theta = hex_vector()
    w = hex_vector()
    a = hex_matrix()
    metadata = serializers.DictField(default=dict)

    def to_representation(self, instance):
        return {
            'domain': {
                'lower': [float(v).hex() for v in instance.domain.lower],
                'upper': [float(v).hex() for v in instance.domain.upper],
            },
            'mu': [[float(v).hex() for v in row] for row in instance.mu],
            'sigma': [[float(v).hex() for v in row] for row in instance.sigma],
            'theta': [float(v).hex() for v in instance.theta],
            'w': [float(v).hex() for v in instance.w],
            'a': [[float(v).hex() for v in row] for row in instance.a],
            'metadata': {key: _plain(value) for key, value in instance.metadata.items()},
        }

    def validate(self, attrs):
        K = len(attrs['mu'])
        for name in ('sigma', 'theta', 'w', 'a'):
            if len(attrs[name]) != K:
                raise serializers.ValidationError({name: f'Expected {K} entries, got {len(attrs[name])}.'})
        return attrs

    def create(self, validated_data):
        try:
            return PrimitiveSet(
                validated_data['domain']['domain'],
                np.array(validated_data['mu']),
                np.array(validated_data['sigma']),
                np.array(validated_data['theta']),
                np.array(validated_data['w']),
                np.array(validated_data['a']),
                validated_data.get('metadata', {}),
            )
        except ParameterError as exc:
            raise serializers.ValidationError(str(exc))


def _plain(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def dumps(ps):
    return JSONRenderer().render(PrimitiveSetSerializer(ps).data)


def loads(payload):
    serializer = PrimitiveSetSerializer(data=JSONParser().parse(io.BytesIO(payload)))
    serializer.is_valid(raise_exception=True)
    return serializer.save()


def save(path, ps):
    with open(path, 'wb') as handle:
        handle.write(dumps(ps))


def load(path):
    with open(path, 'rb') as handle:
        return loads(handle.read())
