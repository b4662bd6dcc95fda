"""Input validation helpers shared by the estimators and functional API."""

import numbers

import numpy as np


def check_feature_map(x, name="x", allow_empty=False):
    """Validate a feature map and return it as a float64 ``(C, H, W)`` array.

    Zero-channel maps are accepted only when ``allow_empty`` is set; they
    arise from degenerate channel splits.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"{name} must be a (channels, height, width) array, got shape {arr.shape}")
    c, h, w = arr.shape
    if h < 1 or w < 1:
        raise ValueError(f"{name} must have positive height and width, got {h}x{w}")
    if c < 1 and not allow_empty:
        raise ValueError(f"{name} must have at least one channel")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_batch(X, name="X"):
    """Return ``X`` as a 4-D batch and a flag telling whether it was a single map."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 3:
        return arr[np.newaxis], True
    if arr.ndim == 4:
        return arr, False
    raise ValueError(f"{name} must be a feature map (C, H, W) or a batch (N, C, H, W), got shape {arr.shape}")


def check_positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_nonnegative_int(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def check_probability(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_rng(random_state):
    """Turn ``None``, an int seed or a Generator into a ``numpy.random.Generator``."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None or isinstance(random_state, numbers.Integral):
        return np.random.default_rng(random_state)
    raise ValueError(f"random_state must be None, an int or a numpy Generator, got {type(random_state).__name__}")
