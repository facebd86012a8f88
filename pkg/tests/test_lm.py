import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from usmt_gec.lm import (
    BOS,
    EOS,
    UNK,
    NGramLanguageModel,
    induce_classes,
    perplexity,
    read_arpa,
    score,
    score_state,
    train_class_lm,
    train_lm,
    write_arpa,
)

# Fixture corpus: every sentence has at most 5 tokens, and both orders of a
# bigram model have nonzero counts-of-counts n1..n4, so genuine modified
# Kneser-Ney discounts are estimable.
MKN_CORPUS = (
    [["a", "b"]] * 4
    + [["c", "d"]] * 3
    + [["e", "f"]] * 2
    + [
        ["g", "h"],
        ["b", "a"],
        ["a", "d", "e"],
        ["h", "d", "b"],
        ["f", "d", "c", "b"],
        ["c", "e"],
    ]
)

# Expected probabilities derived with an independent exact-fraction
# transcription of the interpolated modified-KN formulas (continuation
# counts at the lower order, BOS-initial grams kept raw, discounts from
# counts-of-counts of the adjusted counts, unigram level interpolated with
# the uniform distribution over the 10-entry vocabulary).
MKN_EXPECTED_PROBS = {
    ("a",): F(307, 4680),
    ("b",): F(79, 585),
    ("c",): F(307, 4680),
    ("d",): F(79, 585),
    ("e",): F(113, 1170),
    ("g",): F(113, 1170),
    (EOS,): F(124, 585),
    (UNK,): F(73, 1170),
    ("a", "b"): F(683, 1053),
    ("a", "d"): F(98, 1053),
    ("d", "c"): F(6829, 84240),
    (BOS, "a"): F(5347, 16200),
    ("b", EOS): F(3439, 4095),
    ("a", EOS): F(241, 2106),
    ("c", "b"): F(196, 1755),
}
MKN_EXPECTED_BOWS = {
    ("a",): F(5, 18),
    ("d",): F(7, 18),
    (BOS,): F(13, 45),
    ("b",): F(1, 7),
}


@pytest.fixture(scope="module")
def mkn_model():
    return train_lm(MKN_CORPUS, 2, unk_singletons=False)


class TestModifiedKneserNey:
    def test_smoothing_selected(self, mkn_model):
        assert mkn_model.smoothing == "modified-kneser-ney"

    @pytest.mark.parametrize("gram,expected", sorted(MKN_EXPECTED_PROBS.items()))
    def test_hand_derived_probabilities(self, mkn_model, gram, expected):
        assert 10.0 ** mkn_model.prob[gram] == pytest.approx(
            float(expected), abs=1e-6
        )

    @pytest.mark.parametrize("ctx,expected", sorted(MKN_EXPECTED_BOWS.items()))
    def test_hand_derived_backoffs(self, mkn_model, ctx, expected):
        assert 10.0 ** mkn_model.backoff[ctx] == pytest.approx(
            float(expected), abs=1e-6
        )

    def test_unseen_bigram_backs_off(self, mkn_model):
        lp, _ = score_state(mkn_model, ("a",), "g")
        assert 10.0**lp == pytest.approx(float(F(113, 4212)), abs=1e-9)

    def test_conditional_normalization(self, mkn_model):
        for ctx in [(), ("a",), ("d",), (BOS,), ("never-seen",)]:
            total = sum(
                10.0 ** score_state(mkn_model, ctx, w)[0] for w in mkn_model.vocab
            )
            assert total == pytest.approx(1.0, abs=1e-6)


class TestWittenBellFallback:
    def test_tiny_corpus_falls_back(self):
        model = train_lm([["a", "a", "b"]], 1, unk_singletons=False)
        assert model.smoothing == "witten-bell"
        # By hand: counts a:2 b:1 </s>:1, total 4, 3 distinct, |V| = 4.
        assert 10.0 ** model.prob[("a",)] == pytest.approx(2.75 / 7, abs=1e-9)
        assert 10.0 ** model.prob[("b",)] == pytest.approx(1.75 / 7, abs=1e-9)
        assert 10.0 ** model.prob[(UNK,)] == pytest.approx(0.75 / 7, abs=1e-9)

    def test_normalizes_at_higher_order(self):
        model = train_lm([["x", "y"], ["x", "z"]], 3, unk_singletons=False)
        assert model.smoothing == "witten-bell"
        for ctx in [(), ("x",), (BOS, "x"), ("q", "x")]:
            total = sum(
                10.0 ** score_state(model, ctx, w)[0] for w in model.vocab
            )
            assert total == pytest.approx(1.0, abs=1e-6)


class TestScoring:
    def test_full_equals_incremental(self, mkn_model):
        sentence = ["a", "d", "e", "zzz", "b"]
        state = mkn_model.initial_state()
        total = 0.0
        for token in sentence + [EOS]:
            lp, state = score_state(mkn_model, state, token)
            total += lp
        assert score(mkn_model, sentence) == pytest.approx(total, abs=1e-9)

    def test_unknown_token_finite(self, mkn_model):
        lp = score(mkn_model, ["qqqq", "wwww"])
        assert math.isfinite(lp)

    def test_hand_backoff_arithmetic(self, mkn_model):
        # log10 p(a b </s>) = p(a|<s>) + p(b|a) + p(</s>|b), all seen bigrams.
        expected = (
            math.log10(float(F(5347, 16200)))
            + math.log10(float(F(683, 1053)))
            + math.log10(float(F(3439, 4095)))
        )
        assert score(mkn_model, ["a", "b"]) == pytest.approx(expected, abs=1e-6)

    def test_state_bounded_by_order(self):
        model = train_lm(MKN_CORPUS, 2, unk_singletons=False)
        state = model.initial_state()
        for token in ["a", "b", "a", "d"]:
            _, state = score_state(model, state, token)
            assert len(state) <= model.order - 1

    def test_singleton_unk_mapping(self):
        model = train_lm([["a", "a", "only-once", "b", "b"]], 1)
        assert ("only-once",) not in model.prob
        assert 10.0 ** model.prob[(UNK,)] > 0


class TestPerplexity:
    def test_uniform_model_equals_vocab_size(self, tmp_path):
        words = ["u", "v", "w", EOS]
        lp = repr(math.log10(1.0 / len(words)))
        lines = ["\\data\\", f"ngram 1={len(words)}", "", "\\1-grams:"]
        lines += [f"{lp}\t{w}" for w in words]
        lines += ["", "\\end\\", ""]
        path = tmp_path / "uniform.arpa"
        path.write_text("\n".join(lines))
        model = read_arpa(path)
        corpus = [["u", "v"], ["w", "w", "u"]]
        assert perplexity(model, corpus) == pytest.approx(len(words), rel=1e-12)

    def test_memorizing_model_prefers_training_order(self):
        sentence = ["the", "cat", "sat", "on", "the", "mat"]
        model = train_lm([sentence] * 3, 2, unk_singletons=False)
        shuffled = ["mat", "the", "sat", "cat", "on", "the"]
        assert perplexity(model, [sentence]) < perplexity(model, [shuffled])

    def test_empty_sentence_corpus_finite(self, mkn_model):
        assert math.isfinite(perplexity(mkn_model, [[]]))

    def test_empty_corpus_rejected(self, mkn_model):
        with pytest.raises(ValueError):
            perplexity(mkn_model, [])


class TestArpa:
    def test_roundtrip_exact_scores(self, tmp_path):
        model = train_lm(MKN_CORPUS, 3, unk_singletons=False)
        path = tmp_path / "model.arpa"
        write_arpa(model, path)
        loaded = read_arpa(path)
        assert loaded.order == model.order
        rng = random.Random(0)
        vocab = sorted(model.vocab)
        for _ in range(1000):
            sent = [rng.choice(vocab + ["oov"]) for _ in range(rng.randint(0, 6))]
            assert score(loaded, sent) == score(model, sent)

    def test_bos_marker_present(self, tmp_path):
        model = train_lm(MKN_CORPUS, 2, unk_singletons=False)
        path = tmp_path / "model.arpa"
        write_arpa(model, path)
        assert f"-99.0\t{BOS}" in path.read_text()


class TestWordClasses:
    def test_two_separated_blobs(self):
        rng = np.random.RandomState(0)
        left = rng.normal(loc=-5.0, scale=0.1, size=(20, 4))
        right = rng.normal(loc=5.0, scale=0.1, size=(20, 4))
        matrix = np.vstack([left, right])
        tokens = [f"w{i}" for i in range(40)]
        cmap = induce_classes(tokens, matrix, k=2, seed=3)
        left_ids = {cmap.token_class(f"w{i}") for i in range(20)}
        right_ids = {cmap.token_class(f"w{i}") for i in range(20, 40)}
        assert len(left_ids) == 1
        assert len(right_ids) == 1
        assert left_ids != right_ids

    def test_defaults(self):
        import inspect

        assert inspect.signature(induce_classes).parameters["k"].default == 200
        assert inspect.signature(train_class_lm).parameters["order"].default == 9
        assert inspect.signature(train_lm).parameters["order"].default == 5

    def test_fewer_vectors_than_k_reduces(self):
        matrix = np.zeros((3, 2))
        with pytest.warns(UserWarning):
            cmap = induce_classes(["a", "b", "c"], matrix, k=5)
        assert cmap.n_classes == 1

    def test_single_class_lm_degenerates_to_length_model(self):
        matrix = np.zeros((3, 2))
        cmap = induce_classes(["a", "b", "c"], matrix, k=1)
        model = train_class_lm([["a", "b"], ["c", "a"], ["b"]], cmap, order=2)
        assert score(model, ["a", "b"]) == pytest.approx(
            score(model, ["c", "a"]), abs=1e-9
        )

    def test_unknown_token_designated_class(self):
        matrix = np.eye(2)
        cmap = induce_classes(["a", "b"], matrix, k=2)
        assert cmap.token_class("unseen") == 0
