"""Input validation helpers, in the spirit of sklearn's check_array."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.sparse as sp


def check_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float array; reject empty, non-finite and all-zero input."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    if not np.any(arr):
        raise ValueError(f"{name} is the zero vector")
    return arr


def check_matrix(vectors, min_rows: int = 2):
    """Coerce a vector collection to a 2-D array (dense or CSR) with finite, nonzero rows."""
    if sp.issparse(vectors):
        mat = vectors.tocsr()
        if mat.shape[0] < min_rows:
            raise ValueError(f"need at least {min_rows} vectors, got {mat.shape[0]}")
        if not np.all(np.isfinite(mat.data)):
            raise ValueError("matrix contains NaN or Inf")
        row_sq = np.asarray(mat.multiply(mat).sum(axis=1)).ravel()
        if np.any(row_sq == 0):
            raise ValueError("matrix contains a zero row")
        return mat
    mat = np.asarray(vectors, dtype=float)
    if mat.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {mat.shape}")
    if mat.shape[0] < min_rows:
        raise ValueError(f"need at least {min_rows} vectors, got {mat.shape[0]}")
    if not np.all(np.isfinite(mat)):
        raise ValueError("matrix contains NaN or Inf")
    if np.any(~np.any(mat, axis=1)):
        raise ValueError("matrix contains a zero row")
    return mat


def check_distribution(dist, name: str = "dist") -> np.ndarray:
    """Validate a probability vector: nonnegative, finite, sums to ~1."""
    arr = np.asarray(dist, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{name} must sum to 1, got {total!r}")
    return arr


def check_token_seq(seq, name: str = "seq", min_len: int = 0) -> Sequence[str]:
    if min_len and len(seq) < min_len:
        raise ValueError(f"{name} must contain at least {min_len} tokens, got {len(seq)}")
    return seq


def check_is_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
