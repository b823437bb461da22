"""Report assembly and rendering in the fixed row schema, plus the
simulate runner with checkpoint/resume support."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import (
    LEXICAL,
    SURFACE,
    Corpus,
    TaskProfile,
    get_profile,
    load_corpus,
    preprocess,
    save_corpus,
    split_sentences,
    tokenize,
    truncate,
)
from .dispersion import DispersionConfig, mean_pairwise_distance, report_scale
from .errors import ConfigError
from .lexical import pooled_distinct_n, pooled_ttr, self_bleu_diversity
from .ngram import NGramLanguageModel
from .probes import ChainProbes, corpus_embeddings, corpus_graphs
from .recursion import (
    ChainStep,
    FilterConfig,
    IterationRecord,
    MixConfig,
    RecursionConfig,
    chain_steps,
)
from .semantic import div_sem, load_embeddings
from .syntactic import WLConfig, div_syn, parse_conllu

logger = logging.getLogger(__name__)

COLUMNS = ("Iter", "PPL", "TTR", "Distinct-2", "Distinct-3", "1-Self-BLEU", "Div_syn", "Div_sem")

_FIELDS = ("ppl", "ttr", "distinct2", "distinct3", "one_minus_self_bleu", "div_syn", "div_sem")


@dataclass(frozen=True)
class DiversityReport:
    """One rendered row: a label, optional perplexity and the six
    diversity percentages (absent metrics stay None)."""

    label: str
    ppl: float | None = None
    ttr: float | None = None
    distinct2: float | None = None
    distinct3: float | None = None
    one_minus_self_bleu: float | None = None
    div_syn: float | None = None
    div_sem: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in _FIELDS[1:]:
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 100.0):
                raise ValueError(f"{name}={value!r} outside [0, 100]")

    def to_payload(self) -> dict:
        payload = {"label": self.label, "provenance": dict(self.provenance)}
        for name in _FIELDS:
            payload[name] = getattr(self, name)
        return payload

    @classmethod
    def from_payload(cls, payload: dict) -> "DiversityReport":
        return cls(
            label=payload["label"],
            provenance=dict(payload.get("provenance", {})),
            **{name: payload.get(name) for name in _FIELDS},
        )

    @classmethod
    def from_record(cls, record: IterationRecord, provenance: dict | None = None) -> "DiversityReport":
        return cls(
            label=f"Iteration {record.iteration}",
            ppl=record.ppl,
            ttr=record.ttr,
            distinct2=record.distinct2,
            distinct3=record.distinct3,
            one_minus_self_bleu=record.one_minus_self_bleu,
            div_syn=record.div_syn,
            div_sem=record.div_sem,
            provenance=provenance or {},
        )


def _format_value(value: float | None) -> str:
    if value is None:
        return "--"
    if value < 10.0:
        return f"{value:.3g}"
    return f"{value:.1f}"


def render(reports, format: str = "tsv") -> bytes:
    """Render reports as a fixed-column TSV table or lossless JSON."""
    reports = list(reports)
    if format == "tsv":
        lines = ["\t".join(COLUMNS)]
        for rep in reports:
            row = [rep.label] + [_format_value(getattr(rep, name)) for name in _FIELDS]
            lines.append("\t".join(row))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "json":
        payload = [rep.to_payload() for rep in reports]
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")
    raise ValueError(f"unknown render format {format!r}")


def parse_report_json(data: bytes) -> list[DiversityReport]:
    return [DiversityReport.from_payload(item) for item in json.loads(data.decode("utf-8"))]


def _config_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]


def measure(
    corpus_path: str | Path,
    conllu_path: str | Path | None = None,
    embeddings_path: str | Path | None = None,
    profile: TaskProfile | str = "story",
    disp: DispersionConfig = DispersionConfig(),
    model_path: str | Path | None = None,
    label: str | None = None,
    self_bleu_pool: int | None = 5000,
    wl: WLConfig = WLConfig(),
    threads: int = 1,
    corpus_format: str = "jsonl",
) -> DiversityReport:
    """Measure one corpus end to end.

    Lexical metrics run on truncated lexical tokens, Self-BLEU on pooled
    surface sentences; the syntactic and semantic columns require adapter
    output files and stay absent (with a warning) when those are missing.
    An optional serialized model adds the perplexity column.
    """
    if isinstance(profile, str):
        profile = get_profile(profile)
    corpus = load_corpus(corpus_path, format=corpus_format)
    docs = Corpus(tuple(preprocess(d, profile) for d in corpus))

    lex_seqs = []
    for doc in docs:
        seq = truncate(tokenize(doc.text, LEXICAL), profile.truncation_length)
        if len(seq):
            lex_seqs.append(list(seq))
    sentences = []
    for doc in docs:
        for sent in split_sentences(doc.text):
            tokens = list(tokenize(sent, SURFACE))
            if tokens:
                sentences.append(tokens)

    values: dict[str, float | None] = {name: None for name in _FIELDS}
    if lex_seqs:
        values["ttr"] = 100.0 * pooled_ttr(lex_seqs)
        values["distinct2"] = 100.0 * pooled_distinct_n(lex_seqs, 2)
        values["distinct3"] = 100.0 * pooled_distinct_n(lex_seqs, 3)
    if len(sentences) >= 2:
        values["one_minus_self_bleu"] = 100.0 * self_bleu_diversity(
            sentences, max_pool=self_bleu_pool, seed=disp.seed
        )

    if conllu_path is not None:
        if Path(conllu_path).exists():
            graphs = parse_conllu(Path(conllu_path))
            values["div_syn"] = div_syn(graphs, wl, disp)
        else:
            logger.warning("CoNLL-U file %s missing; Div_syn left absent", conllu_path)
    if embeddings_path is not None:
        if Path(embeddings_path).exists():
            values["div_sem"] = div_sem(load_embeddings(embeddings_path), disp)
        else:
            logger.warning("embedding file %s missing; Div_sem left absent", embeddings_path)
    if model_path is not None:
        if Path(model_path).exists():
            model = NGramLanguageModel.load(model_path)
            values["ppl"] = model.perplexity(
                [list(tokenize(d.text, SURFACE)) for d in docs]
            )
        else:
            logger.warning("model dump %s missing; PPL left absent", model_path)

    provenance = {
        "corpus": str(corpus_path),
        "conllu": str(conllu_path) if conllu_path else None,
        "embeddings": str(embeddings_path) if embeddings_path else None,
        "model": str(model_path) if model_path else None,
        "profile": profile.name,
        "seed": disp.seed,
        "sample_size": disp.sample_size,
        "repeats": disp.repeats,
        "exhaustive": disp.exhaustive,
        "self_bleu_pool": self_bleu_pool,
        "wl_h": wl.h,
        "wl_label_source": wl.label_source,
    }
    provenance["config_hash"] = _config_hash(provenance)
    return DiversityReport(label=label or Path(corpus_path).stem, provenance=provenance, **values)


# -- simulate ---------------------------------------------------------------


def load_simulation_config(config_path: str | Path) -> dict:
    path = Path(config_path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read simulation config {path}: {exc}")
    if not isinstance(payload, dict):
        raise ConfigError("simulation config must be a JSON object")
    if "corpus" not in payload:
        raise ConfigError("simulation config requires a 'corpus' path")
    return payload


def _build_recursion_config(payload: dict, threads: int) -> RecursionConfig:
    profile_spec = payload.get("profile", "story")
    if isinstance(profile_spec, str):
        profile = get_profile(profile_spec)
    elif isinstance(profile_spec, dict):
        profile = get_profile(profile_spec.get("name", "custom"),
                              **{k: v for k, v in profile_spec.items() if k != "name"})
    else:
        raise ConfigError("'profile' must be a name or an object")
    filter_cfg = None
    if payload.get("filter") is not None:
        filter_cfg = FilterConfig(**payload["filter"])
    mix_cfg = None
    if payload.get("mix") is not None:
        mix_cfg = MixConfig(**payload["mix"])
    try:
        return RecursionConfig(
            iterations=payload.get("iterations", 6),
            profile=profile,
            order=payload.get("order", 3),
            alpha=payload.get("alpha", 0.01),
            filter=filter_cfg,
            mix=mix_cfg,
            seed=payload.get("seed", 0),
            holdout_fraction=payload.get("holdout_fraction", 0.1),
            accumulate=payload.get("accumulate", False),
            threads=threads,
        )
    except TypeError as exc:
        raise ConfigError(f"bad simulation config: {exc}")


def _build_probes(payload: dict) -> ChainProbes:
    spec = payload.get("probes") or {}
    dim = spec.get("embedding_dim", 256)
    return ChainProbes(
        graphs_fn=corpus_graphs,
        embeddings_fn=lambda corpus: corpus_embeddings(corpus, dim=dim),
        wl=WLConfig(h=spec.get("wl_h", 2)),
        self_bleu_pool=spec.get("self_bleu_pool", 5000),
        dispersion_sample=spec.get("dispersion_sample", 2000),
        dispersion_repeats=spec.get("dispersion_repeats", 5),
    )


def simulate(
    config_path: str | Path,
    out_path: str | Path,
    threads: int = 1,
    checkpoint_dir: str | Path | None = None,
    resume: bool = False,
) -> list[IterationRecord]:
    """Drive a recursion chain from a JSON config, streaming records.

    Writes one canonical JSON record per line to out_path and, when a
    checkpoint directory is given, enough state after every iteration to
    resume an interrupted run with identical results.
    """
    payload = load_simulation_config(config_path)
    config = _build_recursion_config(payload, threads)
    probes = _build_probes(payload)

    data0 = load_corpus(Path(payload["corpus"]))
    prompts = load_corpus(Path(payload["prompts"])) if payload.get("prompts") else None

    config_key = _config_hash({k: v for k, v in payload.items() if k != "out"})
    resume_iteration = 0
    resume_corpora: list[Corpus] = []
    done_records: list[dict] = []
    ckpt = Path(checkpoint_dir) if checkpoint_dir else None
    if ckpt and resume:
        state_path = ckpt / "checkpoint.json"
        if state_path.exists():
            state = json.loads(state_path.read_text(encoding="utf-8"))
            if state.get("config_hash") != config_key:
                raise ConfigError("checkpoint belongs to a different configuration")
            resume_iteration = state["iteration"]
            done_records = state["records"]
            for i in range(1, resume_iteration + 1):
                resume_corpora.append(load_corpus(ckpt / f"data_{i}.jsonl"))

    records: list[IterationRecord] = []
    lines: list[str] = [json.dumps(rec, sort_keys=True) for rec in done_records]
    for step in chain_steps(
        data0,
        prompts,
        config,
        probes=probes,
        resume_iteration=resume_iteration,
        resume_corpora=resume_corpora or None,
    ):
        records.append(step.record)
        lines.append(json.dumps(step.record.to_payload(), sort_keys=True))
        logger.info(
            "iteration %d done in %.1fs (size %d)",
            step.record.iteration, step.record.seconds, step.record.dataset_size,
        )
        if ckpt:
            ckpt.mkdir(parents=True, exist_ok=True)
            save_corpus(step.corpus, ckpt / f"data_{step.record.iteration}.jsonl")
            step.model.save(ckpt / f"model_{step.record.iteration}.json")
            state = {
                "config_hash": config_key,
                "iteration": step.record.iteration,
                "records": done_records
                + [r.to_payload() for r in records],
                "seed": config.seed,
            }
            (ckpt / "checkpoint.json").write_text(
                json.dumps(state, sort_keys=True), encoding="utf-8"
            )
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return records
