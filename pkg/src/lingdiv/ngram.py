"""Word-level n-gram language model with add-alpha smoothing, backoff,
nucleus + temperature decoding and perplexity.

The model is the desk-scale generator driving the recursive-training
simulation. Sampling never materializes the full vocabulary distribution:
with add-alpha smoothing every unobserved continuation of a context has
the same probability, so a step works on (observed successors, uniform
tail) and stays exactly equivalent to filtering the dense distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_distribution, check_is_fitted

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

_CUM_EPS = 1e-12  # tolerance for the cumulative-mass cut


@dataclass(frozen=True)
class DecodingConfig:
    """Nucleus threshold, temperature, generation cap and seed."""

    top_p: float = 0.9
    temperature: float = 0.7
    max_new_tokens: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.top_p <= 1.0):
            raise ValueError("top_p must be in (0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


def apply_temperature(dist, temperature: float) -> np.ndarray:
    """Sharpen or flatten a distribution: p_i^(1/T), renormalized."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    arr = check_distribution(dist)
    if temperature == 1.0:
        return arr.copy()
    powered = np.power(arr, 1.0 / temperature)
    return powered / powered.sum()


def nucleus_filter(dist, p: float) -> np.ndarray:
    """Keep the smallest probability-sorted prefix with cumulative mass >= p.

    Ties are broken toward lower indices; the survivors are renormalized
    and everything else is zeroed.
    """
    if not (0.0 < p <= 1.0):
        raise ValueError("p must be in (0, 1]")
    arr = check_distribution(dist)
    order = np.argsort(-arr, kind="stable")
    cum = np.cumsum(arr[order])
    cut = int(np.searchsorted(cum, p - _CUM_EPS, side="left"))
    cut = min(cut, len(arr) - 1)
    keep = order[: cut + 1]
    out = np.zeros_like(arr)
    out[keep] = arr[keep]
    return out / out.sum()


class NGramLanguageModel(BaseEstimator):
    """Order-k n-gram model over word tokens with add-alpha smoothing.

    Unseen contexts back off to the longest observed suffix, down to the
    unigram level. The prediction vocabulary is the training types plus
    EOS and UNK; BOS only ever appears inside contexts.
    """

    def __init__(self, order: int = 3, alpha: float = 0.01):
        self.order = order
        self.alpha = alpha

    # -- training ----------------------------------------------------------

    def fit(self, sequences: Iterable[Sequence[str]], y=None):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        counts: list[dict[tuple, dict[str, int]]] = [dict() for _ in range(self.order)]
        types: set[str] = set()
        n_sequences = 0
        for seq in sequences:
            n_sequences += 1
            # BOS is reserved for context framing and may not occur as data
            tokens = [UNK if t == BOS else t for t in seq]
            types.update(tokens)
            stream = [BOS] * (self.order - 1) + tokens + [EOS]
            start = self.order - 1
            for pos in range(start, len(stream)):
                token = stream[pos]
                for m in range(self.order):
                    ctx = tuple(stream[pos - m : pos])
                    successors = counts[m].setdefault(ctx, {})
                    successors[token] = successors.get(token, 0) + 1
        if n_sequences == 0:
            raise ValueError("cannot fit on an empty corpus")
        self._install(counts, types)
        return self

    def _install(self, counts, types: set[str]) -> None:
        vocab = [UNK, EOS] + sorted(types - {UNK, EOS, BOS})
        self.vocab_ = tuple(vocab)
        self.index_ = {tok: i for i, tok in enumerate(vocab)}
        self.counts_ = counts
        self.totals_ = [
            {ctx: sum(succ.values()) for ctx, succ in level.items()} for level in counts
        ]
        self._step_cache: dict = {}

    @classmethod
    def uniform(cls, vocabulary: Iterable[str], alpha: float = 0.01) -> "NGramLanguageModel":
        """A unigram model with no observations: exactly 1/|V| everywhere."""
        model = cls(order=1, alpha=alpha)
        counts: list[dict[tuple, dict[str, int]]] = [{(): {}}]
        model._install(counts, set(vocabulary))
        return model

    # -- distributions -----------------------------------------------------

    def _map_token(self, token: str) -> str:
        if token == BOS or token in self.index_:
            return token
        return UNK

    def _resolve(self, context: Sequence[str]) -> tuple[int, tuple]:
        """Longest observed (level, context suffix) after UNK mapping."""
        mapped = tuple(self._map_token(t) for t in context)[-(self.order - 1) :] if self.order > 1 else ()
        for m in range(len(mapped), 0, -1):
            ctx = mapped[len(mapped) - m :]
            if ctx in self.counts_[m]:
                return m, ctx
        return 0, ()

    def _context_counts(self, context: Sequence[str]) -> tuple[dict[str, int], int]:
        """Successor counts at the longest observed context suffix."""
        m, ctx = self._resolve(context)
        successors = self.counts_[m].get(ctx)
        if successors is None:
            # unseen even at the unigram level: an unfitted/uniform model
            return {}, 0
        return successors, self.totals_[m][ctx]

    def next_dist(self, context: Sequence[str] = ()) -> np.ndarray:
        """Dense smoothed next-token distribution over vocab_."""
        check_is_fitted(self, "vocab_")
        successors, total = self._context_counts(context)
        v = len(self.vocab_)
        dist = np.full(v, self.alpha, dtype=np.float64)
        for token, cnt in successors.items():
            dist[self.index_[token]] += cnt
        dist /= total + self.alpha * v
        return dist

    def log_prob(self, token: str, context: Sequence[str] = ()) -> float:
        """Smoothed log P(token | context) with UNK mapping."""
        check_is_fitted(self, "vocab_")
        successors, total = self._context_counts(context)
        tok = self._map_token(token)
        if tok == BOS:
            raise ValueError("BOS cannot be scored")
        count = successors.get(tok, 0)
        return math.log((count + self.alpha) / (total + self.alpha * len(self.vocab_)))

    # -- generation --------------------------------------------------------

    def _step_table(self, mapped: tuple, top_p: float, temperature: float):
        """Cached per-context decoding table: nucleus support and cumulative
        weights, computed once per (resolved context, p, temperature)."""
        for m in range(len(mapped), 0, -1):
            ctx = mapped[len(mapped) - m :]
            if ctx in self.counts_[m]:
                break
        else:
            ctx = ()
        key = (ctx, top_p, temperature)
        cached = self._step_cache.get(key)
        if cached is not None:
            return cached
        successors = self.counts_[len(ctx)].get(ctx) or {}
        total = self.totals_[len(ctx)][ctx] if successors else 0
        v = len(self.vocab_)
        denom = total + self.alpha * v
        exponent = 1.0 / temperature
        # observed successors sorted by probability desc, vocab index asc
        obs = sorted(successors.items(), key=lambda kv: (-kv[1], self.index_[kv[0]]))
        obs_tokens = [tok for tok, _ in obs]
        counts_arr = np.fromiter((cnt for _, cnt in obs), dtype=np.float64, count=len(obs))
        obs_w = ((counts_arr + self.alpha) / denom) ** exponent
        n_tail = v - len(obs)
        tail_w = (self.alpha / denom) ** exponent
        z = float(obs_w.sum() + n_tail * tail_w)
        # nucleus cut over (observed desc, then tail in vocab order)
        cum = np.cumsum(obs_w)
        target = top_p - _CUM_EPS
        cut = int(np.searchsorted(cum, target * z, side="left"))
        if cut < len(obs):
            table = (obs_tokens[: cut + 1], cum[: cut + 1], 0, 0.0, None)
        else:
            # the nucleus spills into the uniform tail
            obs_mass = float(cum[-1]) if len(obs) else 0.0
            j = math.ceil((target * z - obs_mass) / tail_w) if tail_w > 0 else 0
            j = max(1, min(j, n_tail))
            mask = np.ones(v, dtype=bool)
            if obs_tokens:
                mask[np.fromiter((self.index_[t] for t in obs_tokens), dtype=np.int64)] = False
            tail_idx = np.flatnonzero(mask)[:j]
            table = (obs_tokens, cum, j, tail_w, tail_idx)
        self._step_cache[key] = table
        return table

    def _sample_step(self, context: Sequence[str], top_p: float, temperature: float, rng) -> str:
        """One decoding step on the compact (observed, uniform tail) form."""
        k = self.order - 1
        mapped = tuple(self._map_token(t) for t in context)[-k:] if k else ()
        return self._sample_mapped(mapped, top_p, temperature, rng)

    def _sample_mapped(self, mapped: tuple, top_p: float, temperature: float, rng) -> str:
        obs_tokens, cum, j, tail_w, tail_idx = self._step_table(mapped, top_p, temperature)
        obs_mass = cum[-1] if len(obs_tokens) else 0.0
        r = rng.random() * (obs_mass + j * tail_w)
        if r < obs_mass:
            choice = int(np.searchsorted(cum, r, side="right"))
            return obs_tokens[min(choice, len(obs_tokens) - 1)]
        t = min(int((r - obs_mass) / tail_w), j - 1)
        return self.vocab_[tail_idx[t]]

    def sample(
        self,
        prompt_tokens: Sequence[str] = (),
        config: DecodingConfig = DecodingConfig(),
        rng: np.random.Generator | None = None,
    ) -> list[str]:
        """Autoregressive generation: temperature, then nucleus, each step.

        Returns the generated continuation tokens (prompt excluded),
        stopping at EOS or after max_new_tokens.
        """
        check_is_fitted(self, "vocab_")
        if rng is None:
            rng = np.random.default_rng(config.seed)
        k = self.order - 1
        context = [BOS] * k + [self._map_token(t) for t in prompt_tokens]
        generated: list[str] = []
        for _ in range(config.max_new_tokens):
            mapped = tuple(context[len(context) - k :]) if k else ()
            token = self._sample_mapped(mapped, config.top_p, config.temperature, rng)
            if token == EOS:
                break
            generated.append(token)
            context.append(token)
        return generated

    # -- evaluation --------------------------------------------------------

    def perplexity(self, sequences: Iterable[Sequence[str]]) -> float:
        """exp of the negative mean per-token log-probability, EOS included."""
        check_is_fitted(self, "vocab_")
        total_nats = 0.0
        n_tokens = 0
        for seq in sequences:
            body = [UNK if t == BOS else self._map_token(t) for t in seq]
            stream = [BOS] * (self.order - 1) + body + [EOS]
            start = self.order - 1
            for pos in range(start, len(stream)):
                context = stream[pos - (self.order - 1) : pos] if self.order > 1 else ()
                total_nats -= self.log_prob(stream[pos], context)
                n_tokens += 1
        if n_tokens == 0:
            raise ValueError("perplexity is undefined on an empty corpus")
        return math.exp(total_nats / n_tokens)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        check_is_fitted(self, "vocab_")
        return {
            "format_version": 1,
            "order": self.order,
            "alpha": self.alpha,
            "vocab": list(self.vocab_),
            "counts": [
                [[list(ctx), sorted(succ.items())] for ctx, succ in sorted(level.items())]
                for level in self.counts_
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NGramLanguageModel":
        if payload.get("format_version") != 1:
            raise ValueError(f"unsupported model dump version {payload.get('format_version')!r}")
        model = cls(order=payload["order"], alpha=payload["alpha"])
        counts: list[dict[tuple, dict[str, int]]] = []
        for level in payload["counts"]:
            counts.append({tuple(ctx): dict(succ) for ctx, succ in level})
        types = set(payload["vocab"]) - {UNK, EOS}
        model._install(counts, types)
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NGramLanguageModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
