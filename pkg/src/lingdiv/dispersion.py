"""Mean pairwise cosine distance with seeded subsampling, and report scaling.

Both the semantic and the syntactic diversity scores are dispersions of
vector sets; this module holds the machinery they share. Large sets are
estimated by drawing a fixed-size sample several times with seeded,
repeat-specific streams and averaging, exactly reproducible for a given
seed regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._validation import check_matrix, check_vector


@dataclass(frozen=True)
class DispersionConfig:
    sample_size: int = 2000
    repeats: int = 5
    seed: int = 0
    exhaustive: bool = False

    def __post_init__(self):
        if self.sample_size < 2:
            raise ValueError("sample_size must be >= 2")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")


def cosine_distance(u, v) -> float:
    """1 - cos(u, v); 0 for positively collinear vectors, 2 for antipodal."""
    u = check_vector(u, "u")
    v = check_vector(v, "v")
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("vector norm underflows to zero")
    # clip float noise; the true similarity lies in [-1, 1]
    sim = min(1.0, max(-1.0, float(np.dot(u / nu, v / nv))))
    return 1.0 - sim


def _normalize_rows(mat):
    if sp.issparse(mat):
        norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
        inv = sp.diags(1.0 / norms)
        return inv @ mat
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / norms


def _mean_offdiag_distance(normalized) -> float:
    """Mean of 1 - G_ij over the strict upper triangle of the Gram matrix."""
    n = normalized.shape[0]
    if sp.issparse(normalized):
        gram = (normalized @ normalized.T).toarray()
    else:
        gram = normalized @ normalized.T
    iu = np.triu_indices(n, k=1)
    sims = np.clip(gram[iu], -1.0, 1.0)
    return float(np.mean(1.0 - sims))


def mean_pairwise_distance(vectors, config: DispersionConfig = DispersionConfig()) -> float:
    """Average pairwise cosine distance of a vector set.

    Exhaustive mode averages all N(N-1)/2 pairs once. Sampled mode draws
    config.sample_size vectors without replacement per repeat (stream
    seeded by (seed, repeat)) and averages the within-sample means. When
    every vector fits in one sample the repeats are identical, so a single
    repeat is computed.
    """
    mat = check_matrix(vectors, min_rows=2)
    n = mat.shape[0]
    normalized = _normalize_rows(mat)
    if config.exhaustive or n <= config.sample_size:
        return _mean_offdiag_distance(normalized)
    total = 0.0
    for rep in range(config.repeats):
        rng = np.random.default_rng([config.seed, rep])
        idx = rng.choice(n, size=config.sample_size, replace=False)
        idx.sort()
        total += _mean_offdiag_distance(normalized[idx])
    return total / config.repeats


def report_scale(d: float) -> float:
    """Map a cosine distance in [0, 2] to the halved percentage scale."""
    if not (0.0 <= d <= 2.0):
        raise ValueError(f"distance {d!r} outside [0, 2]")
    return (d / 2.0) * 100.0
