"""Dense float64 primitives: pseudo-inverse, row geometry, softmax losses.

Matrices follow the row-vector convention used by CLIP-style checkpoints:
the forward text projection has shape (d_t, d) and is applied as
``eos_row @ forward``; its Moore-Penrose inverse has shape (d, d_t) and is
applied as ``shared_row @ inverse``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    NonFinite,
    NonPositiveTemperature,
    NotAProbability,
    ShapeMismatch,
    SvdFailure,
    ZeroVector,
)
from .validation import as_matrix


def pseudo_inverse(w, rank_tolerance: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values below ``rank_tolerance * sigma_max`` are treated as zero,
    so rank-deficient inputs stay numerically stable instead of blowing up.
    """
    m = as_matrix(w, "pseudo_inverse input")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(str(exc)) from exc
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    inv_s = np.where(s > rank_tolerance * s[0], 1.0 / np.where(s == 0, 1.0, s), 0.0)
    return (vt.T * inv_s) @ u.T


@dataclass(frozen=True)
class ProjectionPair:
    """A forward projection (d_t, d) together with its pseudo-inverse (d, d_t)."""

    forward: np.ndarray
    inverse: np.ndarray
    rank_tolerance: float = 1e-10

    def __post_init__(self):
        fwd = as_matrix(self.forward, "forward projection")
        inv = as_matrix(self.inverse, "inverse projection")
        if fwd.shape != inv.shape[::-1]:
            raise DimensionMismatch(
                f"forward {fwd.shape} and inverse {inv.shape} are not transposes in shape"
            )
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", inv)

    @classmethod
    def from_forward(cls, w, rank_tolerance: float = 1e-10) -> "ProjectionPair":
        w = as_matrix(w, "forward projection")
        return cls(w, pseudo_inverse(w, rank_tolerance), rank_tolerance)

    @property
    def shared_dim(self) -> int:
        return self.forward.shape[1]

    @property
    def eos_dim(self) -> int:
        return self.forward.shape[0]


def normalize_rows(m, *, return_zero_rows: bool = False):
    """Scale each row to unit L2 norm. Zero rows are returned unchanged.

    With ``return_zero_rows=True`` also returns the indices of zero rows.
    """
    m = as_matrix(m, "normalize_rows input")
    norms = np.linalg.norm(m, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    out = m / safe[:, None]
    if return_zero_rows:
        return out, np.flatnonzero(zero)
    return out


def cosine_matrix(a, b) -> np.ndarray:
    """Pairwise cosine similarities between rows of a and rows of b."""
    a = as_matrix(a, "cosine_matrix lhs")
    b = as_matrix(b, "cosine_matrix rhs")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"lhs has {a.shape[1]} columns, rhs has {b.shape[1]}")
    an, zero_a = normalize_rows(a, return_zero_rows=True)
    bn, zero_b = normalize_rows(b, return_zero_rows=True)
    if zero_a.size or zero_b.size:
        raise ZeroVector("cosine undefined for zero rows")
    return np.clip(an @ bn.T, -1.0, 1.0)


def softmax_rows(logits, temperature: float = 1.0) -> np.ndarray:
    """Row-wise softmax of ``logits * temperature``, stable under large inputs."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    z = as_matrix(logits, "softmax input") * temperature
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax_rows(logits, temperature: float = 1.0) -> np.ndarray:
    if not temperature > 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {temperature}")
    z = as_matrix(logits, "log_softmax input") * temperature
    z -= z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def cross_entropy_rows(logits, targets, temperature: float = 1.0) -> float:
    """Mean over rows of -sum(target * log softmax(logits * temperature))."""
    logits = as_matrix(logits, "cross_entropy logits")
    targets = as_matrix(targets, "cross_entropy targets")
    if logits.shape != targets.shape:
        raise ShapeMismatch(f"logits {logits.shape} vs targets {targets.shape}")
    log_p = log_softmax_rows(logits, temperature)
    return float(-(targets * log_p).sum(axis=1).mean())


def kl_divergence(p, q, epsilon: float = 1e-6) -> float:
    """D_KL(p || q) with label-side smoothing q -> (q + eps) / (1 + C*eps).

    Zero entries of p contribute nothing; q may contain exact zeros as long
    as epsilon > 0 keeps the smoothed ratio finite.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ShapeMismatch(f"p has {p.size} entries, q has {q.size}")
    for name, v in (("p", p), ("q", q)):
        if not np.all(np.isfinite(v)):
            raise NonFinite(f"{name}: contains NaN or Inf")
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-6:
            raise NotAProbability(f"{name}: not a probability vector")
    qs = (q + epsilon) / (1.0 + q.size * epsilon)
    mask = p > 0
    if epsilon == 0.0 and np.any(qs[mask] == 0.0):
        raise NotAProbability("q has zero mass where p is positive and epsilon is 0")
    return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(qs[mask]))))
