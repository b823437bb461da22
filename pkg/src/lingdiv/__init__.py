"""Linguistic diversity toolkit: lexical, syntactic and semantic metrics
plus a desk-scale simulator of recursive training on model-generated text."""

from .corpus import (
    Corpus,
    Document,
    TaskProfile,
    TokenSeq,
    get_profile,
    load_corpus,
    preprocess,
    preprocess_corpus,
    save_corpus,
    split_sentences,
    tokenize,
    truncate,
)
from .dispersion import DispersionConfig, cosine_distance, mean_pairwise_distance, report_scale
from .errors import ConfigError, LingdivError, ParseError, SchemaError, StructureError
from .lexical import (
    BleuConfig,
    TokenStats,
    bleu,
    distinct_n,
    pooled_distinct_n,
    pooled_ttr,
    self_bleu_diversity,
    token_stats,
    ttr,
)
from .ngram import DecodingConfig, NGramLanguageModel, apply_temperature, nucleus_filter
from .probes import ChainProbes, HashingSentenceEncoder, chain_parse, corpus_embeddings, corpus_graphs
from .recursion import (
    FilterConfig,
    IterationRecord,
    MixConfig,
    RecursionConfig,
    acceptability_score,
    filter_synthetic,
    measure_corpus,
    mix_fresh,
    run_chain,
    split_subsets,
)
from .report import DiversityReport, measure, parse_report_json, render, simulate
from .semantic import EmbeddingSet, div_sem, load_embeddings
from .syntactic import (
    DependencyGraph,
    WLConfig,
    WLFeatureVector,
    WLFeaturizer,
    build_graph,
    div_syn,
    parse_conllu,
    wl_features,
)

__version__ = "0.1.0"

__all__ = [
    "BleuConfig",
    "ChainProbes",
    "ConfigError",
    "Corpus",
    "DecodingConfig",
    "DependencyGraph",
    "DispersionConfig",
    "DiversityReport",
    "Document",
    "EmbeddingSet",
    "FilterConfig",
    "HashingSentenceEncoder",
    "IterationRecord",
    "LingdivError",
    "MixConfig",
    "NGramLanguageModel",
    "ParseError",
    "RecursionConfig",
    "SchemaError",
    "StructureError",
    "TaskProfile",
    "TokenSeq",
    "TokenStats",
    "WLConfig",
    "WLFeatureVector",
    "WLFeaturizer",
    "acceptability_score",
    "chain_parse",
    "corpus_embeddings",
    "corpus_graphs",
    "filter_synthetic",
    "measure",
    "measure_corpus",
    "mix_fresh",
    "parse_report_json",
    "render",
    "run_chain",
    "simulate",
    "split_subsets",
    "apply_temperature",
    "bleu",
    "build_graph",
    "cosine_distance",
    "distinct_n",
    "div_sem",
    "div_syn",
    "get_profile",
    "load_corpus",
    "load_embeddings",
    "mean_pairwise_distance",
    "nucleus_filter",
    "parse_conllu",
    "pooled_distinct_n",
    "pooled_ttr",
    "preprocess",
    "preprocess_corpus",
    "report_scale",
    "save_corpus",
    "self_bleu_diversity",
    "split_sentences",
    "token_stats",
    "tokenize",
    "truncate",
    "ttr",
    "wl_features",
]
