"""Small argument checks shared by the public entry points."""

import math
import numbers


def check_dimension(n, minimum=2):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError(f"dimension must be an integer, got {n!r}")
    if n < minimum:
        raise ValueError(f"dimension must be >= {minimum}, got {n}")
    return int(n)


def check_finite(value, name="value"):
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def check_open_interval(value, lo, hi, name="value"):
    value = check_finite(value, name)
    if not lo < value < hi:
        raise ValueError(f"{name} must lie in ({lo}, {hi}), got {value}")
    return value


def check_positive(value, name="value"):
    value = check_finite(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_integer(value, name="value", minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)
