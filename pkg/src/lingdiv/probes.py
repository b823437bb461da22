"""Desk-scale probe inputs for the simulation chain.

The syntactic and semantic scores need dependency graphs and sentence
vectors. Real runs get those from external adapter files; inside the
simulation loop, where no neural runtime is available, two deterministic
surrogates stand in:

* a word-class chain "parse": each token links to its predecessor and is
  labeled with a coarse lexical class, so WL features capture local
  word-order patterns rather than true grammatical relations;
* a hashed bag-of-words sentence encoder with signed random projections.

Both only have to rank corpora by variety consistently, which is all the
trend analysis uses them for.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .corpus import SURFACE, Corpus, split_sentences, tokenize
from .semantic import EmbeddingSet
from .syntactic import DependencyGraph, WLConfig, build_graph

_DETERMINERS = frozenset(
    "the a an this that these those my your his her its our their some any no every each".split()
)
_PREPOSITIONS = frozenset(
    "of in to for with on at by from up about into over after under between through during "
    "before against among near across behind beyond within without toward upon".split()
)
_CONJUNCTIONS = frozenset("and or but nor so yet because although while if when since as than".split())
_PRONOUNS = frozenset(
    "i you he she it we they me him us them who whom what which whose mine yours hers ours theirs "
    "himself herself itself myself yourself ourselves themselves".split()
)
_AUXILIARIES = frozenset(
    "is are was were be been being am do does did done have has had having will would can could "
    "shall should may might must not".split()
)


def word_class(token: str) -> str:
    """Coarse lexical class from closed-class lists and suffix heuristics."""
    if all(not ch.isalnum() for ch in token):
        return "punct"
    if token[0].isdigit():
        return "num"
    lower = token.lower()
    if lower in _DETERMINERS:
        return "det"
    if lower in _PREPOSITIONS:
        return "prep"
    if lower in _CONJUNCTIONS:
        return "conj"
    if lower in _PRONOUNS:
        return "pron"
    if lower in _AUXILIARIES:
        return "aux"
    if token[0].isupper():
        return "propn"
    if lower.endswith("ly"):
        return "adv"
    if lower.endswith(("ed", "ing")):
        return "verb"
    if lower.endswith(("tion", "ness", "ment", "ity", "ism", "ous", "ful", "ive", "al")):
        return "noun"
    return "word"


def chain_parse(tokens: list[str], sentence_id: str) -> DependencyGraph:
    """Chain-structured surrogate parse with word-class labels."""
    n = len(tokens)
    heads = [0] + list(range(1, n))
    deprels = ["root"] + [word_class(t) for t in tokens[1:]]
    upos = [word_class(t).upper() for t in tokens]
    return build_graph(sentence_id, heads, deprels, upos=upos, forms=tokens)


def corpus_graphs(corpus: Corpus) -> list[DependencyGraph]:
    """Surrogate parses for every sentence of every document."""
    graphs: list[DependencyGraph] = []
    for doc in corpus:
        for s_idx, sentence in enumerate(split_sentences(doc.text)):
            tokens = list(tokenize(sentence, SURFACE))
            if tokens:
                graphs.append(chain_parse(tokens, f"{doc.id}#{s_idx}"))
    return graphs


@dataclass(frozen=True)
class HashingSentenceEncoder:
    """Signed feature-hashing bag-of-words sentence vectors."""

    dim: int = 256

    def token_slot(self, token: str) -> tuple[int, float]:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        value = int.from_bytes(digest, "big")
        sign = 1.0 if value & 1 else -1.0
        return (value >> 1) % self.dim, sign

    def encode(self, tokens: list[str]) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            slot, sign = self.token_slot(token.lower())
            vec[slot] += sign
        return vec


def corpus_embeddings(corpus: Corpus, dim: int = 256) -> EmbeddingSet:
    """Surrogate sentence embeddings for every sentence of every document.

    Sentences whose hashed vector cancels to zero are skipped, mirroring
    the zero-row contract of loaded embedding files.
    """
    encoder = HashingSentenceEncoder(dim=dim)
    rows: list[np.ndarray] = []
    ids: list[str] = []
    sents: list[str] = []
    for doc in corpus:
        for s_idx, sentence in enumerate(split_sentences(doc.text)):
            tokens = list(tokenize(sentence, SURFACE))
            if not tokens:
                continue
            vec = encoder.encode(tokens)
            if not np.any(vec):
                continue
            rows.append(vec)
            ids.append(f"{doc.id}#{s_idx}")
            sents.append(sentence)
    matrix = np.vstack(rows) if rows else np.empty((0, dim))
    return EmbeddingSet(matrix=matrix, ids=tuple(ids), sentences=tuple(sents))


@dataclass(frozen=True)
class ChainProbes:
    """Metric inputs used on each iteration's corpus.

    max_probe_docs bounds how many documents feed the graph and embedding
    probes (a seeded subsample; the dispersion step subsamples sentences
    again anyway). Lexical metrics always see the full corpus.
    """

    graphs_fn: Callable[[Corpus], list[DependencyGraph]] = corpus_graphs
    embeddings_fn: Callable[[Corpus], EmbeddingSet] = corpus_embeddings
    wl: WLConfig = field(default_factory=WLConfig)
    self_bleu_pool: int = 5000
    dispersion_sample: int = 2000
    dispersion_repeats: int = 5
    max_probe_docs: int | None = 1500
