"""Dictionary-based spell checker.

Candidates are generated by expanding single edits (deletion, insertion,
substitution, adjacent transposition) of the query, then verified against
the DP edit distance; corrections prefer distance 1 over distance 2
regardless of frequency.  Applied before decoding, never after.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .corpus import Sentence
from .errors import ParseError


@dataclass
class WordList:
    """Lowercased word -> corpus frequency, restricted to frequent words."""

    frequencies: dict = field(default_factory=dict)
    min_frequency: int = 5
    alphabet: frozenset = field(init=False)

    def __post_init__(self):
        bad = [w for w, c in self.frequencies.items() if c <= self.min_frequency]
        if bad:
            raise ValueError(
                f"{len(bad)} words at or below the frequency floor, e.g. {bad[0]!r}"
            )
        self.alphabet = frozenset(ch for w in self.frequencies for ch in w)

    def __contains__(self, word: str) -> bool:
        return word in self.frequencies


def build_wordlist(corpus, min_frequency: int = 5) -> WordList:
    """Lowercased counts; keeps words occurring strictly more than the floor."""
    counts = Counter()
    for sentence in corpus:
        counts.update(token.lower() for token in sentence)
    kept = {w: c for w, c in counts.items() if c > min_frequency}
    return WordList(frequencies=kept, min_frequency=min_frequency)


def edit_distance(a: str, b: str, substitution_cost: int = 1) -> int:
    """Optimal-string-alignment distance (adjacent transposition is one edit)."""
    la, lb = len(a), len(b)
    prev2 = None
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            cost = 0 if a[i - 1] == b[j - 1] else substitution_cost
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if (
                i > 1
                and j > 1
                and a[i - 1] == b[j - 2]
                and a[i - 2] == b[j - 1]
            ):
                cur[j] = min(cur[j], prev2[j - 2] + 1)
        prev2, prev = prev, cur
    return prev[lb]


def _edits1(word: str, alphabet) -> set:
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = {L + R[1:] for L, R in splits if R}
    transposes = {L + R[1] + R[0] + R[2:] for L, R in splits if len(R) > 1}
    replaces = {L + c + R[1:] for L, R in splits if R for c in alphabet}
    inserts = {L + c + R for L, R in splits for c in alphabet}
    return deletes | transposes | replaces | inserts


def candidates(word: str, wordlist: WordList, distance: int) -> set:
    """In-list candidates at exactly the given edit distance (1 or 2)."""
    e1 = _edits1(word, wordlist.alphabet)
    if distance == 1:
        return {c for c in e1 if c in wordlist and c != word}
    hits = set()
    for e in e1:
        for c in _edits1(e, wordlist.alphabet):
            if c in wordlist and c != word and c not in hits:
                # Expansion can overshoot the DP distance (transposed spans
                # edited twice); keep only true distance-2 words.
                if edit_distance(word, c) == 2:
                    hits.add(c)
    return hits


def _reapply_casing(original: str, corrected: str) -> str:
    if original.isupper() and len(original) > 1:
        return corrected.upper()
    if original[:1].isupper():
        return corrected[:1].upper() + corrected[1:]
    return corrected


def correct_token(word: str, wordlist: WordList) -> str:
    """Correct one token, or return it unchanged.

    Tokens that are in-list, single-character, or contain non-alphabetic
    characters are exempt.  Distance-1 candidates always beat distance-2;
    within a distance, highest frequency wins, ties lexicographic.
    """
    if len(word) <= 1 or not word.isalpha():
        return word
    low = word.lower()
    if low in wordlist:
        return word
    pool = candidates(low, wordlist, 1) or candidates(low, wordlist, 2)
    if not pool:
        return word
    best = max(sorted(pool), key=lambda c: wordlist.frequencies[c])
    return _reapply_casing(word, best)


def correct_sentence(sentence: Sentence, wordlist: WordList) -> Sentence:
    """Token-wise correction; never merges or splits tokens."""
    return [correct_token(token, wordlist) for token in sentence]


def write_wordlist(wordlist: WordList, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#min_frequency\t{wordlist.min_frequency}\n")
        for word in sorted(wordlist.frequencies):
            fh.write(f"{word}\t{wordlist.frequencies[word]}\n")


def read_wordlist(path) -> WordList:
    freqs = {}
    min_frequency = 5
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#min_frequency"):
                min_frequency = int(line.split("\t")[1])
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(path, lineno, f"bad wordlist line {line!r}")
            freqs[parts[0]] = int(parts[1])
    return WordList(frequencies=freqs, min_frequency=min_frequency)
