"""The recursive tuning-generation chain.

Each iteration trains a fresh model on the previous iteration's data
only, generates one sample per training example, optionally filters the
synthetic output or mixes in a held-back human subset, and measures the
diversity of the result. Every random decision derives from the master
seed plus fixed tags, so runs are bit-reproducible for any worker count.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from ._parallel import parallel_map
from .corpus import LEXICAL, SURFACE, Corpus, Document, TaskProfile, STORY
from .corpus import preprocess, split_sentences, tokenize, truncate
from .dispersion import DispersionConfig, mean_pairwise_distance, report_scale
from .errors import ConfigError
from .lexical import pooled_distinct_n, pooled_ttr, self_bleu_diversity
from .ngram import DecodingConfig, NGramLanguageModel
from .probes import ChainProbes
from .semantic import div_sem
from .syntactic import WLFeaturizer

logger = logging.getLogger(__name__)

# seed stream tags
_TAG_HOLDOUT = 0
_TAG_MIX = 1
_TAG_GEN = 2
_TAG_PROBE = 3


@dataclass(frozen=True)
class FilterConfig:
    drop_fraction: float = 0.2
    scorer: str = "reference"

    def __post_init__(self):
        if not (0.0 <= self.drop_fraction < 1.0):
            raise ConfigError("drop_fraction must be in [0, 1)")
        if self.scorer not in ("reference", "external"):
            raise ConfigError("scorer must be 'reference' or 'external'")


@dataclass(frozen=True)
class MixConfig:
    synthetic_fraction: float = 0.4
    fresh_subsets: int = 6

    def __post_init__(self):
        if not (0.0 < self.synthetic_fraction < 1.0):
            raise ConfigError("synthetic_fraction must be in (0, 1)")
        if self.fresh_subsets < 1:
            raise ConfigError("fresh_subsets must be >= 1")


@dataclass(frozen=True)
class RecursionConfig:
    iterations: int = 6
    profile: TaskProfile = field(default_factory=lambda: STORY)
    order: int = 3
    alpha: float = 0.01
    filter: FilterConfig | None = None
    mix: MixConfig | None = None
    seed: int = 0
    holdout_fraction: float = 0.1
    accumulate: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.order < 1:
            raise ConfigError("order must be >= 1")
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not (0.0 < self.holdout_fraction < 1.0):
            raise ConfigError("holdout_fraction must be in (0, 1)")
        if self.mix is not None and self.mix.fresh_subsets < self.iterations:
            raise ConfigError("fresh_subsets must be >= iterations when mixing is enabled")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


@dataclass(frozen=True)
class IterationRecord:
    """One Table-style row: perplexity plus the six diversity percentages."""

    iteration: int
    ppl: float
    ttr: float
    distinct2: float
    distinct3: float
    one_minus_self_bleu: float
    div_syn: float
    div_sem: float
    dataset_size: int
    seconds: float

    def to_payload(self) -> dict:
        """Canonical JSON payload; wall-clock time is reporting-only and
        excluded so that result files are byte-stable."""
        return {
            "iteration": self.iteration,
            "ppl": self.ppl,
            "ttr": self.ttr,
            "distinct2": self.distinct2,
            "distinct3": self.distinct3,
            "one_minus_self_bleu": self.one_minus_self_bleu,
            "div_syn": self.div_syn,
            "div_sem": self.div_sem,
            "dataset_size": self.dataset_size,
        }


def acceptability_score(doc: Document, reference_model: NGramLanguageModel) -> float:
    """Mean per-token log-probability of the document body under a
    reference model; empty documents get the minimum score."""
    tokens = list(tokenize(doc.text, SURFACE))
    if not tokens:
        logger.info("empty document %s scored at minimum acceptability", doc.id)
        return -math.inf
    total = 0.0
    k = reference_model.order - 1
    stream = ["<s>"] * k + tokens
    for pos in range(k, len(stream)):
        context = stream[pos - k : pos] if k else ()
        total += reference_model.log_prob(stream[pos], context)
    return total / len(tokens)


def filter_synthetic(
    corpus: Corpus, scorer: Callable[[Document], float], drop_fraction: float
) -> Corpus:
    """Keep the highest-scoring ceil((1-drop_fraction)*N) documents.

    Ties break toward the lower document id; survivors keep their
    original corpus order.
    """
    if not (0.0 <= drop_fraction < 1.0):
        raise ConfigError("drop_fraction must be in [0, 1)")
    n = len(corpus)
    keep_n = math.ceil((1.0 - drop_fraction) * n)
    ranked = sorted(corpus, key=lambda d: (-scorer(d), d.id))
    keep_ids = {d.id for d in ranked[:keep_n]}
    return Corpus(tuple(d for d in corpus if d.id in keep_ids))


def split_subsets(pool: Corpus, k: int, seed: int) -> list[Corpus]:
    """Seeded partition of a corpus into k balanced, disjoint subsets."""
    if k < 1:
        raise ConfigError("subset count must be >= 1")
    rng = np.random.default_rng([seed, _TAG_MIX])
    order = rng.permutation(len(pool))
    bounds = np.linspace(0, len(pool), k + 1).astype(int)
    subsets = []
    for i in range(k):
        idx = sorted(order[bounds[i] : bounds[i + 1]])
        subsets.append(Corpus(tuple(pool[j] for j in idx)))
    return subsets


def mix_fresh(
    synthetic: Corpus, human_pool: Corpus, iteration: int, config: MixConfig, seed: int
) -> Corpus:
    """Concatenate synthetic data with the iteration-th fresh human subset."""
    if not (1 <= iteration <= config.fresh_subsets):
        raise ConfigError(
            f"iteration {iteration} outside the {config.fresh_subsets} fresh subsets"
        )
    subsets = split_subsets(human_pool, config.fresh_subsets, seed)
    fresh = subsets[iteration - 1]
    return Corpus(tuple(synthetic) + tuple(fresh.documents))


def _lexical_token_seqs(corpus: Corpus, profile: TaskProfile, threads: int = 1) -> list[list[str]]:
    def extract(doc: Document) -> list[str]:
        return list(truncate(tokenize(doc.text, LEXICAL), profile.truncation_length))

    return [seq for seq in parallel_map(extract, corpus.documents, threads) if seq]


def _surface_sentences(corpus: Corpus, threads: int = 1) -> list[list[str]]:
    def extract(doc: Document) -> list[list[str]]:
        out = []
        for sent in split_sentences(doc.text):
            tokens = list(tokenize(sent, SURFACE))
            if tokens:
                out.append(tokens)
        return out

    return [s for per_doc in parallel_map(extract, corpus.documents, threads) for s in per_doc]


def measure_corpus(
    corpus: Corpus,
    profile: TaskProfile,
    probes: ChainProbes,
    seed: int,
    threads: int = 1,
) -> dict:
    """The six diversity metrics of one corpus, as percentages."""
    lex = _lexical_token_seqs(corpus, profile, threads)
    sentences = _surface_sentences(corpus, threads)
    disp = DispersionConfig(
        sample_size=probes.dispersion_sample, repeats=probes.dispersion_repeats, seed=seed
    )
    probe_corpus = corpus
    if probes.max_probe_docs is not None and len(corpus) > probes.max_probe_docs:
        rng = np.random.default_rng([seed, _TAG_PROBE])
        idx = sorted(rng.permutation(len(corpus))[: probes.max_probe_docs].tolist())
        probe_corpus = Corpus(tuple(corpus[i] for i in idx))
    graphs = probes.graphs_fn(probe_corpus)
    featurizer = WLFeaturizer(h=probes.wl.h, label_source=probes.wl.label_source)
    vectors = featurizer.fit_transform(graphs)
    embeddings = probes.embeddings_fn(probe_corpus)
    return {
        "ttr": 100.0 * pooled_ttr(lex),
        "distinct2": 100.0 * pooled_distinct_n(lex, 2),
        "distinct3": 100.0 * pooled_distinct_n(lex, 3),
        "one_minus_self_bleu": 100.0
        * self_bleu_diversity(sentences, max_pool=probes.self_bleu_pool, seed=seed),
        "div_syn": report_scale(mean_pairwise_distance(vectors, disp)),
        "div_sem": div_sem(embeddings, disp),
    }


def _holdout_split(corpus: Corpus, fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """(training part, held-out part), seeded, original order preserved."""
    n = len(corpus)
    n_hold = max(1, math.ceil(fraction * n))
    if n_hold >= n:
        raise ConfigError("holdout fraction leaves no training data")
    rng = np.random.default_rng([seed, _TAG_HOLDOUT])
    chosen = set(rng.permutation(n)[:n_hold].tolist())
    hold = Corpus(tuple(corpus[i] for i in range(n) if i in chosen))
    train = Corpus(tuple(corpus[i] for i in range(n) if i not in chosen))
    return train, hold


def _attach_prompts(data0: Corpus, prompts: Corpus | None) -> Corpus:
    if prompts is None:
        return data0
    if len(prompts) != len(data0):
        raise ConfigError(
            f"prompts corpus has {len(prompts)} documents, data has {len(data0)}"
        )
    docs = []
    for doc, prompt_doc in zip(data0, prompts):
        docs.append(Document(id=doc.id, text=doc.text, prompt=prompt_doc.text))
    return Corpus(tuple(docs))


@dataclass(frozen=True)
class ChainStep:
    record: IterationRecord
    corpus: Corpus
    model: NGramLanguageModel


def chain_setup(
    data0: Corpus, prompts: Corpus | None, config: RecursionConfig
) -> tuple[Corpus, Corpus | None, Corpus]:
    """Deterministic chain-start splits: (Data(0) side, fresh pool, holdout)."""
    if len(data0) == 0:
        raise ConfigError("data0 is empty")
    base = _attach_prompts(data0, prompts)
    base = Corpus(tuple(preprocess(doc, config.profile) for doc in base))
    train_pool, holdout = _holdout_split(base, config.holdout_fraction, config.seed)
    if config.mix is None:
        return train_pool, None, holdout
    gen_n = math.ceil(config.mix.synthetic_fraction * len(train_pool))
    if gen_n < 1 or gen_n >= len(train_pool):
        raise ConfigError("synthetic_fraction leaves an empty side of the split")
    rng = np.random.default_rng([config.seed, _TAG_MIX, 0])
    order = rng.permutation(len(train_pool))
    gen_idx = sorted(order[:gen_n].tolist())
    rest_idx = sorted(order[gen_n:].tolist())
    gen_side = Corpus(tuple(train_pool[i] for i in gen_idx))
    fresh_pool = Corpus(tuple(train_pool[i] for i in rest_idx))
    return gen_side, fresh_pool, holdout


def chain_steps(
    data0: Corpus,
    prompts: Corpus | None,
    config: RecursionConfig,
    probes: ChainProbes | None = None,
    score_lookup: Mapping[str, float] | None = None,
    resume_iteration: int = 0,
    resume_corpora: Sequence[Corpus] | None = None,
) -> "Iterator[ChainStep]":
    """Yield one ChainStep per iteration, from resume_iteration + 1 onward.

    On resume, resume_corpora must hold Data(i) for i = 1..resume_iteration
    (only the last entry is needed unless accumulate mode is on); all
    seeded decisions replay identically because every random stream is
    derived from (seed, tag, iteration, index) rather than shared state.
    """
    if config.filter is not None and config.filter.scorer == "external" and score_lookup is None:
        raise ConfigError("external scorer requires score_lookup")
    if resume_iteration and not resume_corpora:
        raise ConfigError("resuming requires the corpora of completed iterations")
    probes = probes or ChainProbes()

    data0_side, fresh_pool, holdout = chain_setup(data0, prompts, config)
    held_tokens = [list(tokenize(d.text, SURFACE)) for d in holdout]

    reference_model: NGramLanguageModel | None = None
    if config.filter is not None and config.filter.scorer == "reference":
        reference_model = NGramLanguageModel(order=config.order, alpha=config.alpha).fit(
            [list(tokenize(d.text, SURFACE)) for d in data0_side]
        )

    decoding = DecodingConfig(
        top_p=config.profile.top_p,
        temperature=config.profile.temperature,
        max_new_tokens=config.profile.max_new_tokens,
        seed=config.seed,
    )

    accumulated: list[Corpus] = [data0_side, *(resume_corpora or ())]
    current = accumulated[-1]
    for n in range(resume_iteration + 1, config.iterations + 1):
        t0 = time.perf_counter()
        if config.accumulate:
            train_docs = [d for part in accumulated for d in part]
        else:
            train_docs = list(current)
        model = NGramLanguageModel(order=config.order, alpha=config.alpha).fit(
            [list(tokenize(d.text, SURFACE)) for d in train_docs]
        )

        # the generation prompt set is the current corpus; under mixing
        # the reserved generation side keeps that role on every iteration
        source = current if config.mix is None else data0_side

        def generate(item: tuple[int, Document]) -> Document:
            idx, doc = item
            rng = np.random.default_rng([config.seed, _TAG_GEN, n, idx])
            prompt_tokens = list(tokenize(doc.prompt, SURFACE)) if doc.prompt else []
            continuation = model.sample(prompt_tokens, decoding, rng=rng)
            text = " ".join(continuation)
            if doc.prompt:
                text = f"{doc.prompt} {text}" if text else doc.prompt
            raw = Document(id=doc.id, text=text, prompt=doc.prompt)
            return preprocess(raw, config.profile)

        synthetic = Corpus(
            tuple(parallel_map(generate, list(enumerate(source)), config.threads))
        )

        if config.filter is not None:
            if config.filter.scorer == "external":
                scorer = lambda d: score_lookup[d.id]  # noqa: E731
            else:
                assert reference_model is not None
                scorer = lambda d: acceptability_score(d, reference_model)  # noqa: E731
            synthetic = filter_synthetic(synthetic, scorer, config.filter.drop_fraction)

        if config.mix is not None:
            assert fresh_pool is not None
            data_n = mix_fresh(synthetic, fresh_pool, n, config.mix, config.seed)
        else:
            data_n = synthetic

        metrics = measure_corpus(
            data_n, config.profile, probes, seed=config.seed + 7919 * n, threads=config.threads
        )
        ppl = model.perplexity(held_tokens)
        record = IterationRecord(
            iteration=n,
            ppl=ppl,
            dataset_size=len(data_n),
            seconds=time.perf_counter() - t0,
            **metrics,
        )
        yield ChainStep(record=record, corpus=data_n, model=model)
        current = data_n
        accumulated.append(data_n)


def run_chain(
    data0: Corpus,
    prompts: Corpus | None,
    config: RecursionConfig,
    probes: ChainProbes | None = None,
    score_lookup: Mapping[str, float] | None = None,
) -> list[IterationRecord]:
    """Run the tuning-generation chain and measure every iteration.

    data0 is the human corpus; prompts, when given, align with it by
    position. score_lookup supplies per-document-id scores for the
    'external' filter scorer.
    """
    return [
        step.record
        for step in chain_steps(data0, prompts, config, probes=probes, score_lookup=score_lookup)
    ]
