"""Command-line entry points.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dispersion import DispersionConfig
from .errors import ConfigError, LingdivError, ParseError, SchemaError, StructureError
from .report import measure, render, simulate
from .semantic import load_embeddings
from .syntactic import WLConfig, WLFeaturizer, parse_conllu, wl_features

logger = logging.getLogger(__name__)

USAGE_ERROR = 1
DATA_ERROR = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master RNG seed")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (output is thread-count independent)")
    parser.add_argument("--config", type=Path, default=None, help="JSON config file; explicit flags override its fields")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lingdiv",
        description="Linguistic diversity metrics and a recursive-training simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_measure = sub.add_parser("measure", help="measure the diversity of one corpus")
    p_measure.add_argument("--corpus", type=Path, default=None)
    p_measure.add_argument("--corpus-format", choices=("jsonl", "plain"), default=None)
    p_measure.add_argument("--conllu", type=Path, default=None, help="CoNLL-U parses for Div_syn")
    p_measure.add_argument("--embeddings", type=Path, default=None, help="embedding JSONL for Div_sem")
    p_measure.add_argument("--model", type=Path, default=None, help="serialized n-gram model for PPL")
    p_measure.add_argument("--profile", default=None,
                           help="summarization | abstract | story | custom")
    p_measure.add_argument("--truncation-length", type=int, default=None,
                           help="override the profile truncation length")
    p_measure.add_argument("--sample-size", type=int, default=None)
    p_measure.add_argument("--repeats", type=int, default=None)
    p_measure.add_argument("--exhaustive", action="store_true", default=None)
    p_measure.add_argument("--self-bleu-pool", type=int, default=None)
    p_measure.add_argument("--label", default=None)
    p_measure.add_argument("--format", choices=("tsv", "json"), default=None)
    p_measure.add_argument("--out", type=Path, default=None, help="write rendered report here instead of stdout")
    _add_common(p_measure)

    p_sim = sub.add_parser("simulate", help="run a recursive tuning-generation chain")
    p_sim.add_argument("--out", type=Path, default=None, help="results JSONL path")
    p_sim.add_argument("--checkpoint", type=Path, default=None, help="checkpoint directory")
    p_sim.add_argument("--resume", action="store_true", help="resume from the checkpoint directory")
    p_sim.add_argument("--format", choices=("tsv", "json"), default=None,
                       help="summary table format (default tsv)")
    _add_common(p_sim)

    p_wl = sub.add_parser("wl-inspect", help="dump the WL feature vector of one sentence")
    p_wl.add_argument("--conllu", type=Path, required=True)
    p_wl.add_argument("--sentence", type=int, default=0, help="0-based sentence index")
    p_wl.add_argument("--h", type=int, default=2)
    p_wl.add_argument("--label-source", choices=("deprel", "upos", "form"), default="deprel")

    p_exp = sub.add_parser("export-vectors", help="dump dispersion input vectors for external plotting")
    group = p_exp.add_mutually_exclusive_group(required=True)
    group.add_argument("--conllu", type=Path)
    group.add_argument("--embeddings", type=Path)
    p_exp.add_argument("--h", type=int, default=2)
    p_exp.add_argument("--label-source", choices=("deprel", "upos", "form"), default="deprel")
    p_exp.add_argument("--out", type=Path, required=True)

    return parser


def _overlay_config(args: argparse.Namespace, keys: dict[str, str]) -> None:
    """Fill unset flags from the JSON config file (flags win)."""
    if getattr(args, "config", None) is None:
        return
    try:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}")
    for attr, key in keys.items():
        if getattr(args, attr, None) is None and key in payload:
            value = payload[key]
            setattr(args, attr, Path(value) if attr in ("corpus", "conllu", "embeddings", "model", "out") and value else value)


def _cmd_measure(args: argparse.Namespace) -> int:
    _overlay_config(args, {
        "corpus": "corpus", "corpus_format": "corpus_format", "conllu": "conllu",
        "embeddings": "embeddings", "model": "model", "profile": "profile",
        "truncation_length": "truncation_length",
        "sample_size": "sample_size", "repeats": "repeats", "exhaustive": "exhaustive",
        "self_bleu_pool": "self_bleu_pool", "label": "label", "format": "format",
        "seed": "seed", "threads": "threads", "out": "out",
    })
    if args.corpus is None:
        raise ConfigError("measure requires --corpus (flag or config)")
    disp = DispersionConfig(
        sample_size=args.sample_size if args.sample_size is not None else 2000,
        repeats=args.repeats if args.repeats is not None else 5,
        seed=args.seed if args.seed is not None else 0,
        exhaustive=bool(args.exhaustive),
    )
    profile_name = args.profile if args.profile is not None else "story"
    overrides = {}
    if args.truncation_length is not None:
        overrides["truncation_length"] = args.truncation_length
    from .corpus import get_profile

    profile = get_profile(profile_name, **overrides)
    report = measure(
        corpus_path=args.corpus,
        conllu_path=args.conllu,
        embeddings_path=args.embeddings,
        model_path=args.model,
        profile=profile,
        disp=disp,
        label=args.label,
        self_bleu_pool=args.self_bleu_pool if args.self_bleu_pool is not None else 5000,
        threads=args.threads if args.threads is not None else 1,
        corpus_format=args.corpus_format if args.corpus_format is not None else "jsonl",
    )
    blob = render([report], format=args.format if args.format is not None else "tsv")
    if args.out is not None:
        Path(args.out).write_bytes(blob)
    else:
        sys.stdout.buffer.write(blob)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.config is None:
        raise ConfigError("simulate requires --config")
    out = args.out
    if out is None:
        payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
        out = Path(payload["out"]) if "out" in payload else None
    if out is None:
        raise ConfigError("simulate requires --out (flag or config)")
    records = simulate(
        args.config,
        out,
        threads=args.threads if args.threads is not None else 1,
        checkpoint_dir=args.checkpoint,
        resume=args.resume,
    )
    from .report import DiversityReport

    reports = [DiversityReport.from_record(rec) for rec in records]
    sys.stdout.buffer.write(render(reports, format=args.format if args.format is not None else "tsv"))
    return 0


def _wl_display(reverse: dict, key) -> str:
    if isinstance(key, str):
        return key
    own, neigh = key
    parts = ",".join(_wl_display(reverse, reverse[nid]) for nid in neigh)
    return f"({_wl_display(reverse, reverse[own])}|{parts})"


def _cmd_wl_inspect(args: argparse.Namespace) -> int:
    graphs = parse_conllu(args.conllu)
    if not (0 <= args.sentence < len(graphs)):
        raise ConfigError(f"sentence index {args.sentence} outside 0..{len(graphs) - 1}")
    graph = graphs[args.sentence]
    from .syntactic import LabelDictionary

    labels = LabelDictionary()
    config = WLConfig(h=args.h, label_source=args.label_source)
    vector = wl_features(graph, config, labels)
    reverse = labels.reverse()
    features = [
        {
            "iteration": it,
            "label_id": lbl,
            "label": _wl_display(reverse, reverse[lbl]),
            "count": count,
        }
        for (it, lbl), count in sorted(vector.counts.items())
    ]
    payload = {
        "sentence_id": graph.sentence_id,
        "n_nodes": vector.n_nodes,
        "h": vector.h,
        "features": features,
    }
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def _cmd_export_vectors(args: argparse.Namespace) -> int:
    lines = []
    if args.conllu is not None:
        graphs = parse_conllu(args.conllu)
        featurizer = WLFeaturizer(h=args.h, label_source=args.label_source)
        matrix = featurizer.fit_transform(graphs)
        for i, graph in enumerate(graphs):
            row = matrix.getrow(i)
            lines.append(json.dumps({
                "id": graph.sentence_id,
                "dim": matrix.shape[1],
                "indices": row.indices.tolist(),
                "values": row.data.tolist(),
            }, sort_keys=True))
    else:
        embeddings = load_embeddings(args.embeddings)
        for row_id, vec in zip(embeddings.ids, embeddings.matrix):
            lines.append(json.dumps({"id": row_id, "vec": vec.tolist()}, sort_keys=True))
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else USAGE_ERROR
    handlers = {
        "measure": _cmd_measure,
        "simulate": _cmd_simulate,
        "wl-inspect": _cmd_wl_inspect,
        "export-vectors": _cmd_export_vectors,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return USAGE_ERROR
    except (ParseError, SchemaError, StructureError) as exc:
        logger.error("%s", exc)
        return DATA_ERROR
    except FileNotFoundError as exc:
        logger.error("file not found: %s", exc.filename or exc)
        return DATA_ERROR
    except (ValueError, LingdivError) as exc:
        logger.error("%s", exc)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
