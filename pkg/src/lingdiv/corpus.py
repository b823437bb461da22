"""Corpus loading, task-specific preprocessing, tokenization and sentence splitting.

Everything here is a pure function over immutable data: documents and
corpora never change after construction, so any number of workers can
share them.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import ParseError, SchemaError

logger = logging.getLogger(__name__)

LEXICAL = "lexical"
SURFACE = "surface"

_WS_RE = re.compile(r"\s+")
# scheme-prefixed URLs plus bare domain+path forms like example.com/x
_URL_RE = re.compile(
    r"""(?:https?://\S+|www\.\S+|\b[\w.-]+\.(?:com|org|net|edu|gov|io)(?:/\S*)?)""",
    re.IGNORECASE,
)
_NEWLINE_TOKEN_RE = re.compile(r"<newline>", re.IGNORECASE)
# word runs vs single non-space, non-word characters
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

# words that end with '.' without closing a sentence
_ABBREVIATIONS = frozenset(
    {
        "dr", "mr", "mrs", "ms", "prof", "sr", "jr", "st", "mt", "etc", "vs",
        "e.g", "i.e", "cf", "al", "fig", "no", "vol", "pp", "approx", "dept",
        "inc", "ltd", "co", "corp", "jan", "feb", "mar", "apr", "jun", "jul",
        "aug", "sep", "sept", "oct", "nov", "dec",
    }
)


@dataclass(frozen=True)
class Document:
    """A single unit of evaluated text, optionally paired with its prompt.

    ``preprocessed`` records whether task preprocessing already ran, which
    is what makes :func:`preprocess` idempotent.
    """

    id: str
    text: str
    prompt: str | None = None
    preprocessed: bool = False


@dataclass(frozen=True)
class Corpus:
    """An immutable, ordered collection of documents with unique ids."""

    documents: tuple[Document, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise SchemaError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __getitem__(self, idx: int) -> Document:
        return self.documents[idx]

    def ids(self) -> tuple[str, ...]:
        return tuple(doc.id for doc in self.documents)

    @staticmethod
    def from_documents(docs: Iterable[Document]) -> "Corpus":
        return Corpus(tuple(docs))


@dataclass(frozen=True)
class TaskProfile:
    """Per-task preprocessing and decoding settings.

    The three built-in profiles differ in truncation length, in which
    cleanup steps run, and in their decoding defaults.
    """

    name: str
    truncation_length: int
    strip_newline_token: bool = False
    replace_urls: bool = False
    top_p: float = 0.9
    temperature: float = 0.7
    max_new_tokens: int = 500

    def __post_init__(self):
        if self.truncation_length <= 0:
            raise ValueError("truncation_length must be positive")
        if not (0.0 < self.top_p <= 1.0):
            raise ValueError("top_p must be in (0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")


SUMMARIZATION = TaskProfile(
    name="summarization",
    truncation_length=20,
    top_p=0.1,
    temperature=0.3,
    max_new_tokens=50,
)
ABSTRACT = TaskProfile(
    name="abstract",
    truncation_length=50,
    replace_urls=True,
    top_p=0.5,
    temperature=0.5,
    max_new_tokens=300,
)
STORY = TaskProfile(
    name="story",
    truncation_length=150,
    strip_newline_token=True,
    top_p=0.9,
    temperature=0.7,
    max_new_tokens=500,
)

PROFILES = {p.name: p for p in (SUMMARIZATION, ABSTRACT, STORY)}


def get_profile(name: str, **overrides) -> TaskProfile:
    """Look up a built-in profile by name; 'custom' requires explicit fields."""
    if name == "custom":
        defaults = dict(
            name="custom", truncation_length=50, strip_newline_token=False,
            replace_urls=False, top_p=0.9, temperature=0.7, max_new_tokens=500,
        )
        defaults.update(overrides)
        return TaskProfile(**defaults)
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; expected one of "
                         f"{sorted(PROFILES)} or 'custom'")
    profile = PROFILES[name]
    return replace(profile, **overrides) if overrides else profile


@dataclass(frozen=True)
class TokenSeq(Sequence[str]):
    """An ordered token list tagged with the tokenization mode that produced it."""

    tokens: tuple[str, ...]
    mode: str = SURFACE

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return TokenSeq(self.tokens[idx], self.mode)
        return self.tokens[idx]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tokens)


def normalize_whitespace(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load a corpus file.

    jsonl: one JSON object per line with fields id, text and optional prompt.
    plain: one document per line; ids are zero-based indices.
    """
    path = Path(path)
    if format not in ("jsonl", "plain"):
        raise ValueError(f"unknown corpus format {format!r}")
    docs: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if format == "plain":
                docs.append(Document(id=str(lineno - 1), text=line.rstrip("\n")))
                continue
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", source=str(path), line=lineno)
            if not isinstance(record, dict):
                raise SchemaError("record is not a JSON object", source=str(path), line=lineno)
            if "text" not in record:
                raise SchemaError("record is missing 'text'", source=str(path), line=lineno)
            if "id" not in record:
                raise SchemaError("record is missing 'id'", source=str(path), line=lineno)
            if not isinstance(record["text"], str):
                raise SchemaError("'text' must be a string", source=str(path), line=lineno)
            prompt = record.get("prompt")
            if prompt is not None and not isinstance(prompt, str):
                raise SchemaError("'prompt' must be a string", source=str(path), line=lineno)
            docs.append(Document(id=str(record["id"]), text=record["text"], prompt=prompt))
    if not docs:
        logger.warning("loaded empty corpus from %s", path)
    return Corpus(tuple(docs))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus as JSONL (the inverse of load_corpus for the jsonl format)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            record: dict = {"id": doc.id, "text": doc.text}
            if doc.prompt is not None:
                record["prompt"] = doc.prompt
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def _strip_prompt(text: str, prompt: str) -> str:
    """Remove the longest common word-boundary prefix of prompt and text."""
    text_words = text.split(" ")
    prompt_words = prompt.split(" ")
    n = 0
    for tw, pw in zip(text_words, prompt_words):
        if tw != pw:
            break
        n += 1
    if n == 0:
        logger.info("prompt does not prefix text; leaving document unchanged")
        return text
    return " ".join(text_words[n:])


def preprocess(doc: Document, profile: TaskProfile) -> Document:
    """Apply task preprocessing: prompt stripping, URL and <newline> cleanup.

    Idempotent: documents that already carry the preprocessed flag are
    returned unchanged.
    """
    if doc.preprocessed:
        return doc
    text = normalize_whitespace(doc.text)
    if doc.prompt:
        text = _strip_prompt(text, normalize_whitespace(doc.prompt))
    if profile.replace_urls:
        text = _URL_RE.sub("WEBSITE", text)
    if profile.strip_newline_token:
        text = _NEWLINE_TOKEN_RE.sub(" ", text)
    text = normalize_whitespace(text)
    return replace(doc, text=text, preprocessed=True)


def preprocess_corpus(corpus: Corpus, profile: TaskProfile) -> Corpus:
    return Corpus(tuple(preprocess(doc, profile) for doc in corpus))


def _is_punct_token(token: str) -> bool:
    return all(not ch.isalnum() and ch != "_" for ch in token)


def tokenize(text: str, mode: str = LEXICAL, casefold: bool = True) -> TokenSeq:
    """Split text into word tokens with punctuation detached.

    lexical mode drops punctuation-only tokens and (by default) case-folds;
    surface mode keeps punctuation marks as their own tokens.
    """
    if mode not in (LEXICAL, SURFACE):
        raise ValueError(f"unknown tokenization mode {mode!r}")
    raw = _TOKEN_RE.findall(text)
    if mode == SURFACE:
        return TokenSeq(tuple(raw), SURFACE)
    words = [t.casefold() if casefold else t for t in raw if not _is_punct_token(t)]
    return TokenSeq(tuple(words), LEXICAL)


def truncate(seq: TokenSeq, limit: int) -> TokenSeq:
    """Keep the first min(len, limit) tokens."""
    if limit <= 0:
        raise ValueError("truncation limit must be positive")
    if len(seq) <= limit:
        return seq
    return TokenSeq(tuple(seq.tokens[:limit]), seq.mode)


def _sentence_end(normalized: str, i: int) -> bool:
    """Does the terminator run ending at index i close a sentence?"""
    if i + 1 >= len(normalized):
        return True
    # otherwise it must be followed by a space and an uppercase letter
    if normalized[i + 1] != " " or i + 2 >= len(normalized):
        return False
    if not normalized[i + 2].isupper():
        return False
    if normalized[i] == ".":
        # walk back over the final word; abbreviations do not terminate
        j = i - 1
        while j >= 0 and (normalized[j].isalnum() or normalized[j] == "."):
            j -= 1
        word = normalized[j + 1 : i].casefold()
        if word in _ABBREVIATIONS:
            return False
    return True


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence segmentation.

    Boundaries occur after runs of . ! ? that are followed by a space and
    an uppercase letter, except after known abbreviations. Joining the
    result with single spaces reproduces the whitespace-normalized input.
    """
    normalized = normalize_whitespace(text)
    if not normalized:
        return []
    sentences: list[str] = []
    start = 0
    i = 0
    n = len(normalized)
    while i < n:
        if normalized[i] in ".!?":
            # consume the whole terminator run (e.g. "?!", "...")
            while i + 1 < n and normalized[i + 1] in ".!?":
                i += 1
            if _sentence_end(normalized, i):
                sentences.append(normalized[start : i + 1].strip())
                start = i + 1
        i += 1
    tail = normalized[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences
