import math

from rest_framework import serializers
from rest_framework.renderers import JSONRenderer


class FiniteFloatField(serializers.FloatField):
    """Non-finite values (an infinite condition number, say) render as null."""

    def to_representation(self, value):
        value = float(value)
        return value if math.isfinite(value) else None


class BiasVarianceReportSerializer(serializers.Serializer):
    K = serializers.IntegerField()
    N = serializers.IntegerField()
    sigma_noise = FiniteFloatField()
    trials = serializers.IntegerField()
    bias2 = FiniteFloatField()
    variance = FiniteFloatField()
    total = FiniteFloatField()
    total_se = FiniteFloatField()
    noise_variance = FiniteFloatField()
    noise_variance_theory = FiniteFloatField()
    aliasing = FiniteFloatField()
    sensor_residual = FiniteFloatField()
    l2_residual = FiniteFloatField()
    residual_ratio = FiniteFloatField()
    c_low = FiniteFloatField()
    c_high = FiniteFloatField()
    ridge = FiniteFloatField()
    condition = FiniteFloatField()
    decomposition_gap = FiniteFloatField(read_only=True)


class LeastSquaresFitSerializer(serializers.Serializer):
    coefficients = serializers.SerializerMethodField()
    ridge = FiniteFloatField()
    condition = FiniteFloatField()
    residual_norm = serializers.SerializerMethodField()
    interpolatory = serializers.BooleanField()

    def get_coefficients(self, obj):
        return obj.coefficients.tolist()

    def get_residual_norm(self, obj):
        return obj.residual_norm.tolist()


def render(serializer_class, instance):
    return JSONRenderer().render(serializer_class(instance).data)
