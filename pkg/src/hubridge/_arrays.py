"""Shared array utilities: validation, immutability, pairwise distances."""

from __future__ import annotations

import numpy as np


def as_matrix(a, name: str = "array") -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array, rejecting non-finite values."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got ndim={out.ndim}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite values")
    return out


def as_vector(a, name: str = "array") -> np.ndarray:
    """Coerce to a float64 1-D array, rejecting non-finite values."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={out.ndim}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite values")
    return out


def as_int_vector(a, name: str = "array") -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.int64)
    if out.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got ndim={out.ndim}")
    return out


def frozen(a: np.ndarray) -> np.ndarray:
    """Return `a` with its write flag cleared (views of it stay readable)."""
    a.flags.writeable = False
    return a


def pairwise_sq_dists(queries: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between each query row and each point row.

    Uses the expanded form ||q||^2 - 2 q.p + ||p||^2 (one GEMM), clipped at
    zero to absorb rounding. Identical input rows produce identical output
    values, so index-based tie-breaking downstream stays deterministic.
    """
    qq = np.einsum("ij,ij->i", queries, queries)
    pp = np.einsum("ij,ij->i", points, points)
    d2 = queries @ points.T
    d2 *= -2.0
    d2 += qq[:, None]
    d2 += pp[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def query_chunks(n_queries: int, n_points: int, cell_budget: int = 4_000_000):
    """Yield (start, stop) row ranges so each distance block stays small."""
    rows = max(1, cell_budget // max(1, n_points))
    for start in range(0, n_queries, rows):
        yield start, min(start + rows, n_queries)
