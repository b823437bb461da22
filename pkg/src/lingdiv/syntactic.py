"""Syntactic diversity: CoNLL-U dependency graphs, Weisfeiler-Lehman
feature vectors and their dispersion.

Graphs are undirected trees over word positions. Each node starts from a
syntactic label (its incoming dependency relation by default) and is
iteratively relabeled with an injective compression of (own label, sorted
neighbor labels). Counting labels at every iteration level, with a label
dictionary shared across all graphs of a run, gives comparable sparse
count vectors whose cosine dispersion is the syntactic diversity score.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_is_fitted
from .dispersion import DispersionConfig, mean_pairwise_distance, report_scale
from .errors import ParseError, StructureError

LABEL_SOURCES = ("deprel", "upos", "form")


@dataclass(frozen=True)
class DependencyGraph:
    """An undirected dependency tree over the words of one sentence.

    adjacency[i] lists the neighbors of node i; exactly one node carries
    the incoming relation "root".
    """

    sentence_id: str
    deprels: tuple[str, ...]
    upos: tuple[str, ...]
    forms: tuple[str, ...]
    adjacency: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.deprels)

    def labels(self, source: str = "deprel") -> tuple[str, ...]:
        if source == "deprel":
            return self.deprels
        if source == "upos":
            return self.upos
        if source == "form":
            return self.forms
        raise ValueError(f"unknown label source {source!r}")


@dataclass(frozen=True)
class WLConfig:
    h: int = 2
    label_source: str = "deprel"

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if self.label_source not in LABEL_SOURCES:
            raise ValueError(f"label_source must be one of {LABEL_SOURCES}")


@dataclass(frozen=True)
class WLFeatureVector:
    """Sparse counts keyed by (iteration, compressed label id)."""

    counts: dict[tuple[int, int], int]
    n_nodes: int
    h: int


class LabelDictionary:
    """Injective string/tuple -> dense id mapping shared across graphs."""

    def __init__(self):
        self._ids: dict = {}

    def __len__(self) -> int:
        return len(self._ids)

    def get_id(self, key) -> int:
        idx = self._ids.get(key)
        if idx is None:
            idx = len(self._ids)
            self._ids[key] = idx
        return idx

    def lookup(self, key) -> int | None:
        return self._ids.get(key)

    def reverse(self) -> dict[int, object]:
        return {v: k for k, v in self._ids.items()}


def build_graph(
    sentence_id: str,
    heads: Sequence[int],
    deprels: Sequence[str],
    upos: Sequence[str] | None = None,
    forms: Sequence[str] | None = None,
) -> DependencyGraph:
    """Construct and validate a graph from 1-based head indices (0 = root)."""
    n = len(heads)
    if n == 0:
        raise StructureError(f"sentence {sentence_id!r} has no words")
    if len(deprels) != n:
        raise ValueError("heads and deprels must have equal length")
    roots = [i for i, h in enumerate(heads) if h == 0]
    if len(roots) != 1:
        raise StructureError(
            f"sentence {sentence_id!r} has {len(roots)} root nodes, expected exactly 1"
        )
    neighbors: list[list[int]] = [[] for _ in range(n)]
    for i, h in enumerate(heads):
        if h == 0:
            continue
        if not (1 <= h <= n):
            raise ParseError(f"HEAD {h} out of range in sentence {sentence_id!r}")
        neighbors[i].append(h - 1)
        neighbors[h - 1].append(i)
    # a structure with one head per non-root node and n-1 edges is a tree
    # iff it is connected; check by traversal from the root
    seen = {roots[0]}
    stack = [roots[0]]
    while stack:
        u = stack.pop()
        for v in neighbors[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    if len(seen) != n:
        raise StructureError(
            f"sentence {sentence_id!r} is cyclic or disconnected "
            f"({len(seen)} of {n} nodes reachable from root)"
        )
    return DependencyGraph(
        sentence_id=sentence_id,
        deprels=tuple(deprels),
        upos=tuple(upos) if upos is not None else tuple("_" for _ in range(n)),
        forms=tuple(forms) if forms is not None else tuple("_" for _ in range(n)),
        adjacency=tuple(tuple(sorted(ns)) for ns in neighbors),
    )


def parse_conllu(source) -> list[DependencyGraph]:
    """Parse CoNLL-U content into dependency graphs.

    Accepts a path, a string of file content, or a text stream. Multiword
    range lines (id "1-2") and empty nodes (decimal ids) are skipped;
    comments select the sentence id when a "# sent_id =" line is present.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = Path(source).read_text(encoding="utf-8") if _looks_like_path(source) else source
    else:
        text = source.read()
    graphs: list[DependencyGraph] = []
    sent_index = 0
    block: list[tuple[int, str]] = []
    comments: list[str] = []

    def flush():
        nonlocal sent_index
        if not block:
            comments.clear()
            return
        graphs.append(_parse_sentence(block, comments, sent_index))
        sent_index += 1
        block.clear()
        comments.clear()

    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.rstrip("\n")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            comments.append(line)
            continue
        block.append((lineno, line))
    flush()
    return graphs


def _looks_like_path(s: str) -> bool:
    return "\n" not in s and "\t" not in s and Path(s).exists()


def _parse_sentence(
    block: list[tuple[int, str]], comments: list[str], sent_index: int
) -> DependencyGraph:
    sentence_id = str(sent_index)
    for comment in comments:
        body = comment.lstrip("#").strip()
        if body.startswith("sent_id"):
            parts = body.split("=", 1)
            if len(parts) == 2 and parts[1].strip():
                sentence_id = parts[1].strip()
    ids: list[int] = []
    heads_raw: list[tuple[int, str]] = []
    deprels: list[str] = []
    upos: list[str] = []
    forms: list[str] = []
    for lineno, line in block:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(
                f"expected 10 tab-separated columns, got {len(cols)}",
                line=lineno,
            )
        token_id = cols[0]
        if "-" in token_id or "." in token_id:
            continue  # multiword range line or empty node
        try:
            idx = int(token_id)
        except ValueError:
            raise ParseError(f"bad token id {token_id!r}", line=lineno)
        ids.append(idx)
        heads_raw.append((lineno, cols[6]))
        forms.append(cols[1])
        upos.append(cols[3])
        deprels.append(cols[7])
    if not ids:
        raise ParseError(f"sentence {sent_index} contains no word lines")
    if ids != list(range(1, len(ids) + 1)):
        raise ParseError(f"sentence {sent_index} has non-contiguous token ids")
    id_set = set(ids)
    heads: list[int] = []
    for lineno, head_str in heads_raw:
        try:
            head = int(head_str)
        except ValueError:
            raise ParseError(
                f"bad HEAD {head_str!r} in sentence {sent_index}", line=lineno
            )
        if head != 0 and head not in id_set:
            raise ParseError(
                f"HEAD {head} references a nonexistent token in sentence {sent_index}",
                line=lineno,
            )
        heads.append(head)
    return build_graph(sentence_id, heads, deprels, upos=upos, forms=forms)


def _wl_iteration_labels(
    graph: DependencyGraph, config: WLConfig, labels: LabelDictionary, grow: bool = True
) -> list[list[int | None]]:
    """Label ids per node for iterations 0..h; None marks labels absent
    from a frozen dictionary."""
    lookup = labels.get_id if grow else labels.lookup
    current: list[int | None] = [lookup(lbl) for lbl in graph.labels(config.label_source)]
    levels = [list(current)]
    for _ in range(config.h):
        new: list[int | None] = []
        for node, neigh in enumerate(graph.adjacency):
            own = current[node]
            neigh_ids = [current[v] for v in neigh]
            if own is None or any(x is None for x in neigh_ids):
                new.append(None)
                continue
            key = (own, tuple(sorted(neigh_ids)))
            new.append(lookup(key))
        current = new
        levels.append(list(current))
    return levels


def wl_features(
    graph: DependencyGraph,
    config: WLConfig = WLConfig(),
    labels: LabelDictionary | None = None,
) -> WLFeatureVector:
    """WL subtree feature counts for a single graph.

    Pass a shared LabelDictionary to make vectors from different graphs
    comparable; a fresh dictionary is used otherwise.
    """
    if labels is None:
        labels = LabelDictionary()
    levels = _wl_iteration_labels(graph, config, labels, grow=True)
    counts: dict[tuple[int, int], int] = {}
    for it, level in enumerate(levels):
        for lbl in level:
            assert lbl is not None
            key = (it, lbl)
            counts[key] = counts.get(key, 0) + 1
    return WLFeatureVector(counts=counts, n_nodes=len(graph), h=config.h)


class WLFeaturizer(TransformerMixin, BaseEstimator):
    """Transform dependency graphs into WL count vectors on a shared basis.

    fit() learns the label dictionary over a graph collection; transform()
    emits a CSR matrix whose columns are (iteration, label) pairs. Labels
    never seen during fit are ignored at transform time, mirroring the
    behavior of text vectorizers.
    """

    def __init__(self, h: int = 2, label_source: str = "deprel"):
        self.h = h
        self.label_source = label_source

    def _config(self) -> WLConfig:
        return WLConfig(h=self.h, label_source=self.label_source)

    def fit(self, graphs: Iterable[DependencyGraph], y=None):
        config = self._config()
        labels = LabelDictionary()
        n_graphs = 0
        for graph in graphs:
            _wl_iteration_labels(graph, config, labels, grow=True)
            n_graphs += 1
        if n_graphs == 0:
            raise ValueError("cannot fit on an empty graph collection")
        self.labels_ = labels
        self.n_features_ = (config.h + 1) * len(labels)
        return self

    def transform(self, graphs: Iterable[DependencyGraph]) -> sp.csr_matrix:
        check_is_fitted(self, "labels_")
        config = self._config()
        n_labels = len(self.labels_)
        data: list[int] = []
        indices: list[int] = []
        indptr: list[int] = [0]
        for graph in graphs:
            levels = _wl_iteration_labels(graph, config, self.labels_, grow=False)
            row: dict[int, int] = {}
            for it, level in enumerate(levels):
                for lbl in level:
                    if lbl is None:
                        continue
                    col = it * n_labels + lbl
                    row[col] = row.get(col, 0) + 1
            for col in sorted(row):
                indices.append(col)
                data.append(row[col])
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), indices, indptr),
            shape=(len(indptr) - 1, self.n_features_),
        )

    def fit_transform(self, graphs, y=None):
        graphs = list(graphs)
        return self.fit(graphs).transform(graphs)


def div_syn(
    graphs: Sequence[DependencyGraph],
    wl: WLConfig = WLConfig(),
    disp: DispersionConfig = DispersionConfig(),
) -> float:
    """Syntactic diversity: dispersion of WL vectors on the report scale."""
    if len(graphs) < 2:
        raise ValueError("div_syn requires at least 2 graphs")
    featurizer = WLFeaturizer(h=wl.h, label_source=wl.label_source)
    vectors = featurizer.fit_transform(graphs)
    return report_scale(mean_pairwise_distance(vectors, disp))
