"""Input validation helpers shared by the estimators and physics modules."""

from __future__ import annotations

import math

import numpy as np
from sklearn.utils.validation import check_array, column_or_1d


def check_scalar(value, name, *, min_val=None, max_val=None, include_min=True,
                 include_max=True, allow_inf=False) -> float:
    """Coerce ``value`` to float and check it lies in the given interval."""
    try:
        x = float(value)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"{name} must be a real number, got {value!r}") from exc
    if math.isnan(x) or (math.isinf(x) and not allow_inf):
        raise ValueError(f"{name} must be finite, got {x}")
    if min_val is not None and (x < min_val or (x == min_val and not include_min)):
        op = ">=" if include_min else ">"
        raise ValueError(f"{name} must be {op} {min_val}, got {x}")
    if max_val is not None and (x > max_val or (x == max_val and not include_max)):
        op = "<=" if include_max else "<"
        raise ValueError(f"{name} must be {op} {max_val}, got {x}")
    return x


def check_int(value, name, *, min_val=None) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise TypeError(f"{name} must be an integer, got {value!r}")
    v = int(value)
    if min_val is not None and v < min_val:
        raise ValueError(f"{name} must be >= {min_val}, got {v}")
    return v


def check_1d(x, name, *, min_len=1, positive=False, nonnegative=False):
    """Return ``x`` as a finite 1-D float array."""
    arr = column_or_1d(check_array(np.atleast_1d(x), ensure_2d=False, dtype=float,
                                   ensure_min_samples=min_len, input_name=name))
    if positive and np.any(arr <= 0):
        raise ValueError(f"{name} must be strictly positive")
    if nonnegative and np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def check_sigma(sigma, n, name="sigma"):
    """Validate per-point standard errors; ``None`` passes through."""
    if sigma is None:
        return None
    s = check_1d(sigma, name, positive=True)
    if s.shape[0] != n:
        raise ValueError(f"{name} has {s.shape[0]} entries, expected {n}")
    return s
