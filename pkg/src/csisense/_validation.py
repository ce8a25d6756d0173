"""Small input-validation helpers shared across the package.

Kept local because the usual sklearn validators reject complex dtypes,
and most of this library's data is complex.
"""

from __future__ import annotations

import numbers

import numpy as np


def check_positive(value: float, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite real, got {value!r}")
    return float(value)


def check_nonnegative(value: float, name: str) -> float:
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a nonnegative finite real, got {value!r}")
    return float(value)


def as_complex_vector(x, name: str = "x") -> np.ndarray:
    """Coerce to a 1-D complex128 array, refusing anything of other rank."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def as_complex_matrix(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def as_vector_or_matrix(x, dim: int, name: str = "x") -> tuple[np.ndarray, bool]:
    """Accept a length-``dim`` vector or a ``dim x M`` matrix of column vectors.

    Returns the data reshaped to ``dim x M`` plus a flag telling the caller
    whether the input was a single vector (so results can be unwrapped).
    """
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
        return arr[:, None], True
    if arr.ndim == 2:
        if arr.shape[0] != dim:
            raise ValueError(f"{name} has {arr.shape[0]} rows, expected {dim}")
        return arr, False
    raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")


def check_labels(labels, name: str = "labels") -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    uniq = set(np.unique(arr).tolist())
    if not uniq <= {0, 1}:
        raise ValueError(f"{name} must contain only 0/1, got values {sorted(uniq)}")
    return arr.astype(np.int64)
