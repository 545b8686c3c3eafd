import math

from .exceptions import DomainError, ParameterError, SizeError


def validate_positive(value, name):
    """Validate a strictly positive finite number"""
    if not math.isfinite(value) or value <= 0:
        raise ParameterError(f"{name} must be a positive number", **{name: value})
    return value


def validate_non_negative(value, name):
    """Validate a finite number >= 0"""
    if not math.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be non-negative", **{name: value})
    return value


def validate_node_count(n):
    """Interior node count; stencils are ill-defined below two nodes"""
    if int(n) != n or n < 2:
        raise SizeError("mesh needs at least two interior nodes", N=n)
    return int(n)


def validate_sub_characteristic(xi, c, allow_zero=False, allow_equal=False):
    """
    Validate the feedback gain against the wave speed.

    The decay estimates need 0 < xi < c; some formulas tolerate xi = 0
    (control-free) or xi = c (optimal gain).
    """
    lower_ok = xi >= 0 if allow_zero else xi > 0
    upper_ok = xi <= c if allow_equal else xi < c
    if not (lower_ok and upper_ok):
        raise DomainError("feedback gain outside the admissible range", xi=xi, c=c)
    return xi


def validate_gamma(gamma):
    """Filtering parameter in (0, 1]"""
    if not math.isfinite(gamma) or gamma <= 0 or gamma > 1:
        raise ParameterError("filtering parameter must lie in (0, 1]", gamma=gamma)
    return gamma


def validate_delta(delta, c, length):
    """Lyapunov weight in (0, c/L)"""
    if not (0 < delta < c / length):
        raise ParameterError("delta must lie in (0, c/L)", delta=delta, bound=c / length)
    return delta
