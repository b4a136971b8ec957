"""Input validation helpers shared across the package.

These mirror the spirit of scikit-learn's ``check_array``: normalize inputs
to float64 numpy arrays and fail loudly with a precise message instead of
propagating shape bugs into the numerics.
"""

from __future__ import annotations

import numpy as np


class ValidationError(ValueError):
    """Raised when an input violates a documented contract."""


def as_float_vector(x, name: str = "vector") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def as_float_matrix(x, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    return arr


def check_scores(scores, n: int | None = None, name: str = "scores") -> np.ndarray:
    """Validate a per-sentence positive-class confidence vector in [0, 1]."""
    arr = as_float_vector(scores, name)
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"{name} has length {arr.shape[0]}, expected {n}")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValidationError(f"{name} values must lie in [0, 1]")
    return arr


def check_probability_rows(rows, name: str = "probabilities", tol: float = 1e-9) -> np.ndarray:
    """Validate an (n, 2) matrix of class probabilities whose rows sum to 1."""
    arr = as_float_matrix(rows, name)
    if arr.shape[1] != 2:
        raise ValidationError(f"{name} must have exactly 2 columns, got {arr.shape[1]}")
    if arr.size and np.abs(arr.sum(axis=1) - 1.0).max() > tol:
        raise ValidationError(f"{name} rows must sum to 1 within {tol}")
    return arr


def check_similarity_matrix(sim, n: int | None = None, name: str = "similarity matrix") -> np.ndarray:
    arr = as_float_matrix(sim, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"{name} has size {arr.shape[0]}, expected {n}")
    return arr


def check_binary_labels(labels, n: int | None = None, name: str = "labels") -> np.ndarray:
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"{name} has length {arr.shape[0]}, expected {n}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValidationError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int64)
