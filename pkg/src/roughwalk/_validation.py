"""Input validation helpers shared by the public functions and estimators."""

import numbers

import numpy as np

# antisymmetry of stored decorations is checked to this absolute tolerance
ANTISYM_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when operands live in spaces of different dimension."""


def as_vector(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_square(x, d=None, name="b"):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_antisymmetric(a, tol=ANTISYM_TOL, name="decoration"):
    a = np.asarray(a)
    err = np.max(np.abs(a + np.swapaxes(a, -1, -2))) if a.size else 0.0
    if err > tol:
        raise ValueError(f"{name} is not antisymmetric (max |a + a^T| = {err:.3g})")
    return a


def check_steps(steps, name="steps"):
    """Return ``steps`` as an ``(N, d)`` array, keeping integer dtypes exact."""
    arr = np.asarray(steps)
    if arr.dtype.kind not in "iuf":
        arr = arr.astype(float)
    if arr.dtype.kind == "u":
        arr = arr.astype(np.int64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (N, d), got {arr.shape}")
    if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def check_order(l, name="l"):
    if not isinstance(l, numbers.Integral) or l < 1:
        raise ValueError(f"{name} must be an integer >= 1, got {l!r}")
    return int(l)


def check_seed(seed):
    if not isinstance(seed, numbers.Integral) or not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def check_unit_interval(s, name="s"):
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {s!r}")
    return float(s)
