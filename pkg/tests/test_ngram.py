import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lingdiv import DecodingConfig, NGramLanguageModel, apply_temperature, nucleus_filter
from lingdiv.ngram import BOS, EOS, UNK


@pytest.fixture
def abab():
    return NGramLanguageModel(order=2, alpha=1.0).fit([["a", "b", "a", "b"]])


class TestTraining:
    def test_bigram_hand_counts(self, abab):
        # vocabulary is {a, b} plus EOS and UNK -> |V| = 4
        dist = abab.next_dist(("a",))
        idx = abab.index_
        assert dist[idx["b"]] == pytest.approx((2 + 1) / (2 + 4))
        assert dist[idx["a"]] == pytest.approx(1 / 6)
        assert dist[idx["b"]] > dist[idx["a"]]

    def test_unigram_ignores_context(self):
        model = NGramLanguageModel(order=1, alpha=0.5).fit([["x", "y", "x"]])
        assert np.allclose(model.next_dist(("x",)), model.next_dist(("y",)))
        assert np.allclose(model.next_dist(()), model.next_dist(("x",)))

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            NGramLanguageModel().fit([])

    def test_lower_orders_are_marginals(self):
        docs = [["a", "b", "c", "a", "b"], ["b", "c", "c"]]
        model = NGramLanguageModel(order=3, alpha=0.1).fit(docs)
        for m in range(1, model.order):
            for ctx, succ in model.counts_[m].items():
                shorter = ctx[1:]
                for token, count in succ.items():
                    assert model.counts_[m - 1][shorter][token] >= count
        # totals at each level sum to the same number of predictions
        sums = [sum(total for total in level.values()) for level in model.totals_]
        assert len(set(sums)) == 1


class TestNextDist:
    def test_sums_to_one(self, abab):
        for ctx in [(), ("a",), ("b",), ("zzz",)]:
            assert abs(abab.next_dist(ctx).sum() - 1.0) < 1e-12

    def test_backoff_to_shorter_context(self):
        model = NGramLanguageModel(order=3, alpha=0.2).fit([["a", "b", "c"], ["b", "c", "a"]])
        unseen = model.next_dist(("q", "b"))  # (q, b) never observed
        shorter = model.next_dist(("b",))
        assert np.allclose(unseen, shorter)

    def test_unknown_words_map_to_unk(self, abab):
        assert abab.log_prob("mystery", ("a",)) == abab.log_prob(UNK, ("a",))


class TestTemperature:
    def test_identity_at_one(self):
        dist = np.array([0.4, 0.4, 0.2])
        assert np.allclose(apply_temperature(dist, 1.0), dist)

    def test_uniform_fixed_point(self):
        dist = np.full(5, 0.2)
        for tau in (0.3, 0.7, 1.5):
            assert np.allclose(apply_temperature(dist, tau), dist)

    def test_hand_case(self):
        out = apply_temperature(np.array([0.9, 0.1]), 0.5)
        expected = np.array([0.81, 0.01]) / 0.82
        assert np.allclose(out, expected, atol=1e-12)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            apply_temperature(np.array([1.0]), 0.0)

    @given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), st.floats(0.2, 5.0))
    @settings(max_examples=60)
    def test_argmax_preserved_and_sharpening(self, weights, tau):
        dist = np.asarray(weights) / sum(weights)
        out = apply_temperature(dist, tau)
        assert np.argmax(out) == np.argmax(dist)
        if tau < 1:
            assert out.max() >= dist.max() - 1e-12
        elif tau > 1:
            assert out.max() <= dist.max() + 1e-12


class TestNucleus:
    def test_identity_at_one(self):
        dist = np.array([0.5, 0.3, 0.2])
        assert np.allclose(nucleus_filter(dist, 1.0), dist)

    def test_hand_case(self):
        out = nucleus_filter(np.array([0.5, 0.3, 0.2]), 0.7)
        assert np.allclose(out, [0.625, 0.375, 0.0], atol=1e-12)

    def test_tiny_p_is_argmax_onehot(self):
        out = nucleus_filter(np.array([0.2, 0.5, 0.3]), 0.05)
        assert np.allclose(out, [0.0, 1.0, 0.0])

    def test_support_shrinks_and_valid(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            dist = rng.dirichlet(np.ones(12))
            out = nucleus_filter(dist, 0.6)
            assert np.all(out[dist == 0] == 0)
            assert abs(out.sum() - 1.0) < 1e-9
            assert np.count_nonzero(out) <= np.count_nonzero(dist)
            assert np.argmax(out) == np.argmax(dist)


class TestSampling:
    def test_deterministic_given_seed(self, abab):
        cfg = DecodingConfig(top_p=0.9, temperature=0.7, max_new_tokens=20, seed=5)
        assert abab.sample((), cfg) == abab.sample((), cfg)

    def test_respects_cap(self, abab):
        cfg = DecodingConfig(top_p=1.0, temperature=1.0, max_new_tokens=7, seed=0)
        assert len(abab.sample((), cfg)) <= 7

    def test_tiny_p_greedy_trace(self):
        # after "a": b twice vs EOS once; after "b": always a
        model = NGramLanguageModel(order=2, alpha=0.01).fit([["a", "b", "a", "b", "a"]] * 5)
        cfg = DecodingConfig(top_p=1e-9, temperature=1.0, max_new_tokens=4, seed=1)
        assert model.sample((), cfg) == ["a", "b", "a", "b"]

    def test_tiny_p_tie_breaks_toward_vocab_index(self):
        # after "b", continuation "a" and EOS are tied; EOS has the lower index
        model = NGramLanguageModel(order=2, alpha=0.01).fit([["a", "b", "a", "b"]] * 5)
        cfg = DecodingConfig(top_p=1e-9, temperature=1.0, max_new_tokens=10, seed=1)
        assert model.sample((), cfg) == ["a", "b"]

    def test_compact_step_matches_dense_path(self):
        """The fast sampler must induce exactly the distribution obtained by
        temperature + nucleus on the dense next-token distribution."""
        docs = [["a", "b", "c", "a"], ["b", "a", "a", "c"], ["c", "c", "b"]]
        model = NGramLanguageModel(order=2, alpha=0.3).fit(docs)
        for ctx in [(), ("a",), ("b",), ("c",), ("zzz",)]:
            for p, tau in [(0.5, 0.7), (0.9, 0.5), (1.0, 1.0), (0.3, 1.3)]:
                dense = nucleus_filter(apply_temperature(model.next_dist(ctx), tau), p)
                counts = Counter()
                n_draws = 4000
                rng = np.random.default_rng(123)
                for _ in range(n_draws):
                    counts[model._sample_step(ctx, p, tau, rng)] += 1
                empirical = np.zeros(len(model.vocab_))
                for token, cnt in counts.items():
                    empirical[model.index_[token]] = cnt / n_draws
                assert set(np.nonzero(empirical)[0]) <= set(np.nonzero(dense)[0])
                assert np.max(np.abs(empirical - dense)) < 0.05

    def test_generation_from_prompt_context(self):
        model = NGramLanguageModel(order=3, alpha=0.01).fit([["the", "cat", "sat"]] * 10)
        cfg = DecodingConfig(top_p=1e-9, temperature=1.0, max_new_tokens=5, seed=0)
        assert model.sample(("the", "cat"), cfg) == ["sat"]


class TestPerplexity:
    def test_uniform_model_gives_vocab_size(self):
        vocab = [f"w{i}" for i in range(23)]
        model = NGramLanguageModel.uniform(vocab)
        # |V| = 23 types + EOS + UNK
        assert model.perplexity([["w0", "w5"], ["w9"]]) == pytest.approx(25.0, rel=1e-12)

    def test_repeating_corpus_approaches_one(self):
        doc = ["a", "b"] * 50
        model = NGramLanguageModel(order=2, alpha=1e-6).fit([doc] * 20)
        assert model.perplexity([doc]) < 1.2

    def test_two_token_hand_chain(self):
        model = NGramLanguageModel(order=2, alpha=1.0).fit([["a", "b", "a", "b"]])
        # vocab {UNK, EOS, a, b}; stream BOS a b EOS
        # P(a|BOS) = (1+1)/(1+4); P(b|a) = (2+1)/(2+4); P(EOS|b) = (1+1)/(2+4)
        expected = math.exp(-(math.log(2 / 5) + math.log(3 / 6) + math.log(2 / 6)) / 3)
        assert model.perplexity([["a", "b"]]) == pytest.approx(expected, rel=1e-12)

    def test_trained_beats_uniform_on_fixture(self):
        docs = [["the", "cat", "sat"], ["the", "dog", "ran"], ["the", "cat", "ran"]]
        model = NGramLanguageModel(order=2, alpha=0.01).fit(docs)
        uniform = NGramLanguageModel.uniform(model.vocab_)
        assert model.perplexity(docs) <= uniform.perplexity(docs)

    def test_empty_rejected(self, abab):
        with pytest.raises(ValueError):
            abab.perplexity([])


class TestSerialization:
    def test_roundtrip_exact(self, tmp_path, abab):
        path = tmp_path / "model.json"
        abab.save(path)
        clone = NGramLanguageModel.load(path)
        assert clone.vocab_ == abab.vocab_
        assert clone.counts_ == abab.counts_
        assert clone.order == abab.order and clone.alpha == abab.alpha
        # byte-identical re-dump
        clone.save(tmp_path / "model2.json")
        assert (tmp_path / "model.json").read_bytes() == (tmp_path / "model2.json").read_bytes()

    def test_version_check(self):
        with pytest.raises(ValueError):
            NGramLanguageModel.from_dict({"format_version": 99})

    def test_sampling_identical_after_roundtrip(self, tmp_path, abab):
        path = tmp_path / "model.json"
        abab.save(path)
        clone = NGramLanguageModel.load(path)
        cfg = DecodingConfig(top_p=0.8, temperature=0.9, max_new_tokens=15, seed=3)
        assert clone.sample((), cfg) == abab.sample((), cfg)


class TestReservedSymbols:
    def test_literal_bos_in_training_becomes_unk(self):
        model = NGramLanguageModel(order=2, alpha=0.1).fit([["a", BOS, "b"]])
        assert BOS not in model.vocab_
        assert UNK in model.vocab_

    def test_get_params(self):
        model = NGramLanguageModel(order=4, alpha=0.5)
        assert model.get_params() == {"order": 4, "alpha": 0.5}
