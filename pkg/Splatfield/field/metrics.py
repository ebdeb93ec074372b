"""
Quadrature norms and the relative L² error.

Anything "field-evaluable" works as an argument: an object with
evaluate(points), a GridField on the rule's own lattice, a plain callable,
or an array already holding values at the quadrature nodes.
"""
import numpy as np

from Splatfield.exceptions import ParameterError, UndefinedRatioError
from .grid import GridField


def values_at(f, rule):
    """Values of f at the rule's nodes, shape (n_nodes, C)."""
    if isinstance(f, np.ndarray):
        values = f
    elif isinstance(f, GridField) and f.resolution == rule.resolution and f.domain == rule.domain:
        values = f.flat()
    elif hasattr(f, 'evaluate'):
        values = f.evaluate(rule.nodes)
    elif callable(f):
        values = f(rule.nodes)
    else:
        raise ParameterError(f'{type(f).__name__} is not field-evaluable')
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if len(values) != rule.size:
        raise ParameterError(f'expected {rule.size} node values, got {len(values)}')
    return values


def l2_norm(f, rule):
    """‖f‖_{L²(Ω)} with channels summed inside the norm."""
    values = values_at(f, rule)
    return float(np.sqrt(rule.integrate(np.sum(values ** 2, axis=1))))


def rel_l2_error(f, g, rule):
    """‖f − g‖ / ‖f‖ under the quadrature rule."""
    f_values = values_at(f, rule)
    g_values = values_at(g, rule)
    if f_values.shape != g_values.shape:
        raise ParameterError(
            f'channel mismatch: reference {f_values.shape[1]}, candidate {g_values.shape[1]}'
        )
    reference = rule.integrate(np.sum(f_values ** 2, axis=1))
    if reference <= 0.0:
        raise UndefinedRatioError('relative error against a zero-norm reference')
    error = rule.integrate(np.sum((f_values - g_values) ** 2, axis=1))
    return float(np.sqrt(error) / np.sqrt(reference))
