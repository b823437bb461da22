"""Lexical diversity metrics: TTR, distinct-n and Self-BLEU-based diversity.

BLEU is implemented from scratch (clipped modified n-gram precision,
uniform weights, brevity penalty, no smoothing). Self-BLEU over a pool of
m sentences avoids the naive O(m^2) reference scan by precomputing, for
every n-gram, the two largest per-sentence counts; the clip value for a
hypothesis is then the pool maximum excluding the hypothesis itself.
"""

from __future__ import annotations

import bisect
import logging
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

logger = logging.getLogger(__name__)

Tokens = Sequence[str]


@dataclass(frozen=True)
class TokenStats:
    types: int
    tokens: int


@dataclass(frozen=True)
class BleuConfig:
    """BLEU settings: n-gram orders 1..max_n with uniform weights.

    There is no smoothing; a zero precision at any order zeroes the score.
    """

    max_n: int = 4
    brevity_penalty: bool = True

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(1.0 / self.max_n for _ in range(self.max_n))


def token_stats(seq: Tokens) -> TokenStats:
    return TokenStats(types=len(set(seq)), tokens=len(seq))


def ttr(seq: Tokens) -> float:
    """Type-token ratio: unique words over running words."""
    if len(seq) == 0:
        raise ValueError("ttr is undefined for an empty sequence")
    stats = token_stats(seq)
    return stats.types / stats.tokens


def ngrams(seq: Tokens, n: int) -> list[tuple[str, ...]]:
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


def distinct_n(seq: Tokens, n: int) -> float:
    """Unique contiguous n-grams over total n-grams."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(seq) < n:
        raise ValueError(f"sequence of length {len(seq)} has no {n}-grams")
    grams = ngrams(seq, n)
    return len(set(grams)) / len(grams)


def pooled_token_stats(seqs: Sequence[Tokens]) -> TokenStats:
    """Type/token counts pooled over many sequences."""
    types: set[str] = set()
    total = 0
    for seq in seqs:
        types.update(seq)
        total += len(seq)
    return TokenStats(types=len(types), tokens=total)


def pooled_ttr(seqs: Sequence[Tokens]) -> float:
    stats = pooled_token_stats(seqs)
    if stats.tokens == 0:
        raise ValueError("pooled ttr is undefined for empty input")
    return stats.types / stats.tokens


def pooled_distinct_n(seqs: Sequence[Tokens], n: int) -> float:
    """distinct-n with n-grams counted per sequence, never across boundaries."""
    if n < 1:
        raise ValueError("n must be >= 1")
    unique: set[tuple[str, ...]] = set()
    total = 0
    for seq in seqs:
        grams = ngrams(seq, n)
        unique.update(grams)
        total += len(grams)
    if total == 0:
        raise ValueError(f"no sequence contains an {n}-gram")
    return len(unique) / total


def _modified_precision(
    hyp_counts: Counter, hyp_total: int, references: Sequence[Tokens], n: int
) -> tuple[int, int]:
    """Clipped match count and total n-gram count for one order."""
    if hyp_total == 0:
        return 0, 0
    max_counts: dict = {}
    for ref in references:
        ref_counts = Counter(ngrams(ref, n))
        for gram, cnt in hyp_counts.items():
            rc = ref_counts.get(gram, 0)
            if rc > max_counts.get(gram, 0):
                max_counts[gram] = rc
    clipped = sum(min(cnt, max_counts.get(gram, 0)) for gram, cnt in hyp_counts.items())
    return clipped, hyp_total


def _brevity_penalty(hyp_len: int, ref_lens: Sequence[int]) -> float:
    # closest reference length, ties to the shorter one
    r = min(ref_lens, key=lambda rl: (abs(rl - hyp_len), rl))
    if hyp_len > r:
        return 1.0
    return math.exp(1.0 - r / hyp_len)


def bleu(hypothesis: Tokens, references: Sequence[Tokens], config: BleuConfig = BleuConfig()) -> float:
    """BLEU of one hypothesis against a reference set.

    Geometric mean of clipped modified precisions for orders 1..max_n with
    uniform weights, times the brevity penalty. Any zero precision gives 0.
    """
    if not references:
        raise ValueError("bleu requires at least one reference")
    if len(hypothesis) == 0:
        logger.info("empty hypothesis scored as 0")
        return 0.0
    log_sum = 0.0
    for n, w in enumerate(config.weights, start=1):
        hyp_counts = Counter(ngrams(hypothesis, n))
        clipped, total = _modified_precision(hyp_counts, sum(hyp_counts.values()), references, n)
        if clipped == 0:
            return 0.0
        log_sum += w * math.log(clipped / total)
    bp = 1.0
    if config.brevity_penalty:
        bp = _brevity_penalty(len(hypothesis), [len(r) for r in references])
    return bp * math.exp(log_sum)


class _PoolIndex:
    """Per-order n-gram statistics for a sentence pool.

    For every n-gram keeps the largest and second-largest per-sentence
    count together with the sentence holding the largest, so the max over
    all sentences except one is a constant-time lookup.
    """

    def __init__(self, sentences: Sequence[Tokens], n: int):
        self.n = n
        self.counts = [Counter(ngrams(s, n)) for s in sentences]
        self.top: dict[tuple, tuple[int, int, int]] = {}  # gram -> (best, holder, second)
        for idx, counter in enumerate(self.counts):
            for gram, cnt in counter.items():
                best, holder, second = self.top.get(gram, (0, -1, 0))
                if cnt > best:
                    best, holder, second = cnt, idx, best
                elif cnt > second:
                    second = cnt
                self.top[gram] = (best, holder, second)

    def clip_excluding(self, gram: tuple, exclude: int) -> int:
        best, holder, second = self.top.get(gram, (0, -1, 0))
        return second if holder == exclude else best


def _self_bleu_order(sentences: Sequence[Tokens], max_n: int) -> float:
    """Mean BLEU-max_n of each sentence against all the others."""
    m = len(sentences)
    indexes = [_PoolIndex(sentences, n) for n in range(1, max_n + 1)]
    lengths = sorted(range(m), key=lambda i: len(sentences[i]))
    sorted_lens = [len(sentences[i]) for i in lengths]
    weights = [1.0 / max_n] * max_n
    total = 0.0
    for i, hyp in enumerate(sentences):
        hyp_len = len(hyp)
        if hyp_len == 0:
            continue  # empty hypothesis scores 0
        log_sum = 0.0
        zero = False
        for n, w in zip(range(1, max_n + 1), weights):
            counter = indexes[n - 1].counts[i]
            tot = hyp_len - n + 1
            if tot <= 0:
                zero = True
                break
            clipped = 0
            for gram, cnt in counter.items():
                clipped += min(cnt, indexes[n - 1].clip_excluding(gram, i))
            if clipped == 0:
                zero = True
                break
            log_sum += w * math.log(clipped / tot)
        if zero:
            continue
        r = _closest_ref_len(sorted_lens, lengths, hyp_len, i)
        bp = 1.0 if hyp_len > r else math.exp(1.0 - r / hyp_len)
        total += bp * math.exp(log_sum)
    return total / m


def _closest_ref_len(sorted_lens: list[int], order: list[int], hyp_len: int, exclude: int) -> int:
    """Closest reference length (ties to shorter) among all sentences but one."""
    best: int | None = None
    pos = bisect.bisect_left(sorted_lens, hyp_len)
    # scan outward from the insertion point, skipping the excluded sentence
    lo, hi = pos - 1, pos
    candidates = []
    while (lo >= 0 or hi < len(sorted_lens)) and len(candidates) < 4:
        if hi < len(sorted_lens):
            if order[hi] != exclude:
                candidates.append(sorted_lens[hi])
            hi += 1
        if lo >= 0:
            if order[lo] != exclude:
                candidates.append(sorted_lens[lo])
            lo -= 1
    for rl in candidates:
        if best is None or (abs(rl - hyp_len), rl) < (abs(best - hyp_len), best):
            best = rl
    assert best is not None
    return best


def self_bleu_diversity(
    sentences: Sequence[Tokens],
    orders: Sequence[int] = (2, 3),
    max_pool: int | None = 5000,
    seed: int = 0,
) -> float:
    """1 minus the mean of Self-BLEU at the given orders (default 2 and 3).

    Pools larger than max_pool are subsampled with a seeded RNG; pass
    max_pool=None for the exhaustive computation.
    """
    if len(sentences) < 2:
        raise ValueError("self_bleu_diversity requires at least 2 sentences")
    if max_pool is not None and max_pool < 2:
        raise ValueError("max_pool must be >= 2")
    pool = list(sentences)
    if max_pool is not None and len(pool) > max_pool:
        rng = random.Random(seed)
        idx = sorted(rng.sample(range(len(pool)), max_pool))
        pool = [pool[i] for i in idx]
    scores = [_self_bleu_order(pool, n) for n in orders]
    return 1.0 - sum(scores) / len(scores)
