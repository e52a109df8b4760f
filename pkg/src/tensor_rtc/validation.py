"""Input validation helpers shared by the public API and the estimators."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch


def check_tensor3(a, name="tensor", allow_nan=False, copy=False) -> np.ndarray:
    """Return ``a`` as a float64 array of shape ``(n1, n2, n3)``.

    Matrices are promoted to ``n3 = 1`` tensors. Raises ``ValueError`` on
    non-finite entries unless ``allow_nan`` is set (NaN then marks a
    missing entry; infinities are always rejected).
    """
    arr = np.array(a, dtype=np.float64, copy=copy) if copy else np.asarray(a, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3:
        raise DimensionMismatch(f"{name} must be a third-order tensor, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise DimensionMismatch(f"{name} has an empty dimension: {arr.shape}")
    if allow_nan:
        if np.isinf(arr).any():
            raise ValueError(f"{name} contains infinite entries")
    elif not np.isfinite(arr).all():
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, names=("a", "b")) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(
            f"{names[0]} has shape {a.shape} but {names[1]} has shape {b.shape}"
        )


def check_dims(dims) -> tuple[int, int, int]:
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 1:
        raise DimensionMismatch(f"dims must be three positive integers, got {dims}")
    return dims
