"""Input validation helpers shared by the estimators and functions."""
import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import ConfigError, EmptyInput


def as_point_cloud(X, *, name="X", min_samples=1, copy=False):
    """Return ``X`` as a read-only, C-contiguous float64 array of shape (n, D).

    Point clouds are immutable everywhere in the package. Writeable input is
    copied and the copy's write flag cleared; already read-only float64
    input is passed through without copying.
    """
    if (
        isinstance(X, np.ndarray)
        and X.dtype == np.float64
        and X.ndim == 2
        and X.flags.c_contiguous
        and not X.flags.writeable
        and X.shape[0] >= min_samples
        and not copy
        and np.isfinite(X).all()
    ):
        return X
    if X is None or (hasattr(X, "__len__") and len(X) == 0):
        raise EmptyInput(f"{name} is empty")
    arr = check_array(
        X,
        dtype=np.float64,
        order="C",
        copy=True,
        ensure_min_samples=min_samples,
        input_name=name,
    )
    arr.flags.writeable = False
    return arr


def as_vector(z, dim=None, *, name="z"):
    v = np.asarray(z, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if dim is not None and v.size != dim:
        raise ValueError(f"{name} has dimension {v.size}, expected {dim}")
    return v


def check_positive(value, name, *, integer=False, minimum=None):
    if integer:
        if not isinstance(value, numbers.Integral) or isinstance(value, bool):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
    elif not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real number, got {value!r}")
    if minimum is not None:
        if value < minimum:
            raise ConfigError(f"{name} must be >= {minimum}, got {value!r}")
    elif value <= 0:
        raise ConfigError(f"{name} must be positive, got {value!r}")
    return value
