"""Semantic diversity over externally produced sentence embeddings.

The core never runs an encoder; it ingests embedding JSONL written by an
adapter (one object per sentence: id, sent, vec) and scores the dispersion
of the vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dispersion import DispersionConfig, mean_pairwise_distance, report_scale
from .errors import ParseError, SchemaError


@dataclass(frozen=True)
class EmbeddingSet:
    """N sentence vectors of equal dimension with per-row provenance."""

    matrix: np.ndarray
    ids: tuple[str, ...]
    sentences: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError("one id per row required")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def load_embeddings(path: str | Path) -> EmbeddingSet:
    """Load embedding JSONL, validating dimension, finiteness and nonzeroness."""
    path = Path(path)
    rows: list[list[float]] = []
    ids: list[str] = []
    sentences: list[str] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", source=str(path), line=lineno)
            for key in ("id", "vec"):
                if key not in record:
                    raise SchemaError(f"record is missing {key!r}", source=str(path), line=lineno)
            vec = record["vec"]
            if not isinstance(vec, list) or not vec:
                raise SchemaError("'vec' must be a non-empty array", source=str(path), line=lineno)
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise SchemaError(
                    f"vector has {len(vec)} components, expected {dim}",
                    source=str(path), line=lineno,
                )
            values = []
            for x in vec:
                if not isinstance(x, (int, float)) or not math.isfinite(x):
                    raise SchemaError("vector contains NaN or Inf", source=str(path), line=lineno)
                values.append(float(x))
            if not any(values):
                raise SchemaError("zero vector", source=str(path), line=lineno)
            rows.append(values)
            ids.append(str(record["id"]))
            sentences.append(str(record.get("sent", "")))
    matrix = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, 0))
    return EmbeddingSet(matrix=matrix, ids=tuple(ids), sentences=tuple(sentences))


def div_sem(embeddings: EmbeddingSet, disp: DispersionConfig = DispersionConfig()) -> float:
    """Semantic diversity: embedding dispersion on the report scale."""
    if len(embeddings) < 2:
        raise ValueError("div_sem requires at least 2 embedding rows")
    return report_scale(mean_pairwise_distance(embeddings.matrix, disp))
