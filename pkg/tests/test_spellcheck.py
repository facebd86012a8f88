import random

import pytest

from usmt_gec.spellcheck import (
    WordList,
    build_wordlist,
    candidates,
    correct_sentence,
    correct_token,
    edit_distance,
    read_wordlist,
    write_wordlist,
)


def oracle_distance(a, b):
    """Independent OSA edit-distance DP (recursive with memo)."""
    memo = {}

    def d(i, j):
        if (i, j) in memo:
            return memo[(i, j)]
        if i == 0 or j == 0:
            res = max(i, j)
        else:
            res = min(
                d(i - 1, j) + 1,
                d(i, j - 1) + 1,
                d(i - 1, j - 1) + (a[i - 1] != b[j - 1]),
            )
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                res = min(res, d(i - 2, j - 2) + 1)
        memo[(i, j)] = res
        return res

    return d(len(a), len(b))


def make_wordlist(words_with_freqs):
    return WordList(frequencies=dict(words_with_freqs))


class TestEditDistance:
    CASES = [
        ("kitten", "sitting", 3),
        ("teh", "the", 1),  # adjacent transposition
        ("", "abc", 3),
        ("abc", "abc", 0),
        ("ca", "abc", 3),  # OSA forbids editing the transposed pair again
        ("speling", "spelling", 1),
    ]

    @pytest.mark.parametrize("a,b,expected", CASES)
    def test_known_distances(self, a, b, expected):
        assert edit_distance(a, b) == expected

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(42)
        alphabet = "abcd"
        for _ in range(300):
            a = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7)))
            b = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 7)))
            assert edit_distance(a, b) == oracle_distance(a, b)


class TestWordList:
    def test_frequency_boundary(self):
        corpus = [["rare"] * 5 + ["common"] * 6]
        wl = build_wordlist(corpus, min_frequency=5)
        assert "rare" not in wl
        assert "common" in wl

    def test_lowercased_counting(self):
        corpus = [["The", "THE", "the", "the", "the", "the", "the"]]
        wl = build_wordlist(corpus, min_frequency=5)
        assert wl.frequencies == {"the": 7}

    def test_empty_corpus(self):
        wl = build_wordlist([], min_frequency=5)
        assert wl.frequencies == {}

    def test_floor_enforced_on_construction(self):
        with pytest.raises(ValueError):
            WordList(frequencies={"low": 3}, min_frequency=5)

    def test_roundtrip(self, tmp_path):
        wl = make_wordlist({"the": 100, "cat": 50})
        path = tmp_path / "words.tsv"
        write_wordlist(wl, path)
        loaded = read_wordlist(path)
        assert loaded.frequencies == wl.frequencies
        assert loaded.min_frequency == wl.min_frequency


class TestCandidates:
    def brute_force(self, word, wordlist, distance):
        return {
            w
            for w in wordlist.frequencies
            if w != word and oracle_distance(word, w) == distance
        }

    def test_matches_brute_force_scan(self):
        rng = random.Random(7)
        words = {
            "".join(rng.choice("abcde") for _ in range(rng.randint(2, 6))): 10
            for _ in range(500)
        }
        wl = make_wordlist(words)
        for query in ["abc", "abcd", "ee", "deadbeef", "cabd"]:
            for dist in (1, 2):
                assert candidates(query, wl, dist) == self.brute_force(
                    query, wl, dist
                ), (query, dist)

    def test_unicode_alphabet_from_list(self):
        wl = make_wordlist({"héllo": 10})
        assert candidates("hello", wl, 1) == {"héllo"}


class TestCorrectToken:
    def test_distance_one_insertion(self):
        wl = make_wordlist({"spelling": 100})
        assert correct_token("speling", wl) == "spelling"

    def test_in_list_unchanged(self):
        wl = make_wordlist({"their": 10})
        assert correct_token("their", wl) == "their"

    def test_no_candidate_within_two(self):
        wl = make_wordlist({"spelling": 100})
        assert correct_token("xyzqw", wl) == "xyzqw"

    def test_distance_one_beats_more_frequent_distance_two(self):
        # "cat" is 1 edit from "caat", "coast" is 2 edits away.
        wl = make_wordlist({"cat": 10, "coast": 10000})
        assert correct_token("caat", wl) == "cat"

    def test_frequency_then_lexicographic_tie(self):
        wl = make_wordlist({"bat": 50, "cat": 100, "hat": 100})
        assert correct_token("xat", wl) == "cat"

    def test_digits_and_punctuation_exempt(self):
        wl = make_wordlist({"the": 100})
        assert correct_token("th3", wl) == "th3"
        assert correct_token("t-e", wl) == "t-e"
        assert correct_token("t", wl) == "t"

    def test_initial_capital_preserved(self):
        wl = make_wordlist({"the": 1000, "cat": 50})
        assert correct_sentence(["Teh", "cat"], wl) == ["The", "cat"]

    def test_all_caps_preserved(self):
        wl = make_wordlist({"the": 1000})
        assert correct_token("TEH", wl) == "THE"


class TestCorrectSentence:
    def test_identity_when_all_in_list(self):
        wl = make_wordlist({"the": 100, "cat": 100, "sat": 100})
        sent = ["the", "cat", "sat"]
        assert correct_sentence(sent, wl) == sent

    def test_length_preserved(self):
        wl = make_wordlist({"the": 100, "cat": 50})
        sent = ["Teh", "cta", "zzzzz", "7", "."]
        assert len(correct_sentence(sent, wl)) == len(sent)

    def test_idempotent(self):
        wl = make_wordlist({"the": 1000, "cat": 500, "spelling": 100})
        sent = ["Teh", "cta", "speling", "unknownzz"]
        once = correct_sentence(sent, wl)
        assert correct_sentence(once, wl) == once
