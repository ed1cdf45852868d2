"""Input validation helpers shared by the functional core and the estimators.

Everything numeric is coerced to float64; embedding matrices are 2-D with
finite entries. Violations raise the contract errors from :mod:`errors`.
"""
from __future__ import annotations

import numpy as np

from .errors import LabelOutOfRange, NonFinite, NotAProbability, ShapeMismatch


def as_matrix(x, name: str = "matrix", cols: int | None = None) -> np.ndarray:
    """Coerce to a finite float64 2-D array. 1-D input becomes a single row."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ShapeMismatch(f"{name}: expected 2-D, got ndim={m.ndim}")
    if not np.all(np.isfinite(m)):
        raise NonFinite(f"{name}: contains NaN or Inf")
    if cols is not None and m.shape[1] != cols:
        raise ShapeMismatch(f"{name}: expected {cols} columns, got {m.shape[1]}")
    return m


def as_labels(y, n_classes: int, name: str = "labels") -> np.ndarray:
    """Coerce to an int64 vector with every entry in [0, n_classes)."""
    labels = np.asarray(y)
    if labels.ndim != 1:
        raise ShapeMismatch(f"{name}: expected 1-D, got ndim={labels.ndim}")
    if labels.size and not np.all(labels == np.floor(labels)):
        raise LabelOutOfRange(f"{name}: non-integral label")
    labels = labels.astype(np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise LabelOutOfRange(f"{name}: labels must lie in [0, {n_classes})")
    return labels


def check_probability_rows(p, name: str = "distribution", tol: float = 1e-6) -> np.ndarray:
    """Validate rows as probability vectors: non-negative, summing to 1 within tol."""
    m = as_matrix(p, name)
    if np.any(m < 0):
        raise NotAProbability(f"{name}: negative mass")
    sums = m.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol):
        raise NotAProbability(f"{name}: rows must sum to 1 within {tol}")
    return m
