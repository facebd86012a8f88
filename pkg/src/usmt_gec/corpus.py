"""Corpus ingestion and preprocessing.

Tokenization, truecasing, byte-pair encoding, length filtering, and a
synthetic-noise generator that turns a clean corpus into a learner-like one.
All models are immutable after training; the apply-phase operations are pure.
"""

from __future__ import annotations

import random
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import ParseError

# A sentence is a list of non-empty, whitespace-free tokens.
Sentence = list[str]

BPE_EOW = "</w>"
BPE_CONT = "@@"

# Characters that always become their own token.  "@" must stay in this set:
# it guarantees tokenized text never contains the "@@" continuation marker,
# which keeps debpe(apply_bpe(s)) == s.
_ALWAYS_SPLIT = set('"“”„«»()[]{}<>;!?@#$%&*=+|~^`\\')
_LEADING_PUNCT = set("\"'“”‘’„«»([{<¿¡")
_TRAILING_PUNCT = set("\"'“”‘’«»)]}>,;:!?")

_CLITIC_RE = re.compile(r"^(.+?)(n't|'ll|'re|'ve|'m|'s|'d)$", re.IGNORECASE)
_ELLIPSIS_RE = re.compile(r"(\.\.+|…)")


def _split_trailing(token: str, final: bool) -> list:
    """Peel trailing punctuation off one whitespace-delimited chunk."""
    tail = []
    while len(token) > 1:
        last = token[-1]
        if last in _TRAILING_PUNCT:
            tail.append(last)
            token = token[:-1]
        elif last == "." and final and not tail and "." not in token[:-1]:
            # Sentence-final period; abbreviation-like tokens ("U.S.") keep it.
            tail.append(last)
            token = token[:-1]
        else:
            break
    return [token] + tail[::-1]


def _split_clitics(token: str) -> list:
    parts = []
    while True:
        m = _CLITIC_RE.match(token)
        if m is None:
            break
        parts.append(m.group(2))
        token = m.group(1)
    return [token] + parts[::-1]


def tokenize(text: str) -> Sentence:
    """Rule-based treebank-style tokenizer.

    Splits punctuation from words and contraction clitics from their hosts
    ("don't" -> "do n't"); collapses whitespace.  Behavior is pinned by the
    fixture suite rather than by any external tool.
    """
    for ch in _ALWAYS_SPLIT:
        if ch in text:
            text = text.replace(ch, f" {ch} ")
    text = _ELLIPSIS_RE.sub(r" \1 ", text)
    chunks = text.split()
    # The sentence-final period rule applies to the last chunk containing a
    # word character; anything after it is punctuation-only.
    last_wordy = max(
        (i for i, c in enumerate(chunks) if any(ch.isalnum() for ch in c)),
        default=-1,
    )
    tokens = []
    for ci, chunk in enumerate(chunks):
        final = ci >= last_wordy
        # Peel leading punctuation.
        lead = []
        while len(chunk) > 1 and chunk[0] in _LEADING_PUNCT:
            lead.append(chunk[0])
            chunk = chunk[1:]
        rest = _split_trailing(chunk, final)
        word, tail = rest[0], rest[1:]
        if "," in word and not re.fullmatch(r"\d+(,\d+)+(\.\d+)?", word):
            word_parts = [p for p in re.sub(r",", " , ", word).split() if p]
        else:
            word_parts = [word]
        out = []
        for part in word_parts:
            out.extend(_split_clitics(part) if part not in (",",) else [part])
        tokens.extend(lead + out + tail)
    return tokens


@dataclass
class TruecaseModel:
    """Most frequent observed casing per lowercased form.

    Counts exclude sentence-initial positions; ties go to the casing seen
    first in the training stream.
    """

    best_casing: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, val in self.best_casing.items():
            if val.lower() != key:
                raise ValueError(f"casing {val!r} does not lowercase to {key!r}")


def train_truecaser(corpus) -> TruecaseModel:
    """Count non-initial surface casings and keep the most frequent per form."""
    counts = {}
    seen_any = False
    for sentence in corpus:
        seen_any = True
        for token in sentence[1:]:
            group = counts.setdefault(token.lower(), {})
            group[token] = group.get(token, 0) + 1
    if not seen_any:
        raise ValueError("cannot train truecaser on an empty corpus")
    best = {
        key: max(group.items(), key=lambda kv: kv[1])[0]
        for key, group in counts.items()
    }
    return TruecaseModel(best_casing=best, counts=counts)


def apply_truecase(model: TruecaseModel, sentence: Sentence) -> Sentence:
    """Replace the sentence-initial token by its preferred casing, if known."""
    if not sentence:
        return []
    first = model.best_casing.get(sentence[0].lower(), sentence[0])
    return [first] + list(sentence[1:])


def detruecase(sentence: Sentence) -> Sentence:
    """Uppercase the first alphabetic character of the first token."""
    if not sentence:
        return []
    first = sentence[0]
    for i, ch in enumerate(first):
        if ch.isalpha():
            first = first[:i] + ch.upper() + first[i + 1 :]
            break
    return [first] + list(sentence[1:])


def write_truecase_model(model: TruecaseModel, path) -> None:
    """Lines "surface_form count"; the winning casing leads its group."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, group in model.counts.items():
            best = model.best_casing[key]
            rest = sorted(
                (form for form in group if form != best),
                key=lambda f: -group[f],
            )
            for form in [best] + rest:
                fh.write(f"{form} {group[form]}\n")


def read_truecase_model(path) -> TruecaseModel:
    counts = {}
    best = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                form, count = line.rsplit(" ", 1)
                n = int(count)
            except ValueError:
                raise ParseError(path, lineno, f"bad truecase line {line!r}") from None
            key = form.lower()
            counts.setdefault(key, {})[form] = n
            best.setdefault(key, form)
    return TruecaseModel(best_casing=best, counts=counts)


@dataclass
class BpeModel:
    """Ordered symbol-pair merge rules learned by greedy BPE."""

    merges: list = field(default_factory=list)
    n_operations: int = 0

    def __post_init__(self):
        if len(self.merges) > self.n_operations:
            raise ValueError("more merges than requested operations")


def learn_bpe(corpus, n_operations: int) -> BpeModel:
    """Greedy most-frequent-pair merge learning with an end-of-word marker.

    Pair counts are weighted by word frequency; frequency ties break
    lexicographically so learned models are reproducible.
    """
    if n_operations < 1:
        raise ValueError("n_operations must be >= 1")
    word_freq = Counter()
    for sentence in corpus:
        word_freq.update(sentence)
    words = {w: tuple(w) + (BPE_EOW,) for w in word_freq}
    merges = []
    for _ in range(n_operations):
        pair_counts = Counter()
        for w, symbols in words.items():
            freq = word_freq[w]
            for a, b in zip(symbols, symbols[1:]):
                pair_counts[(a, b)] += freq
        if not pair_counts:
            break
        best_count = max(pair_counts.values())
        pair = min(p for p, c in pair_counts.items() if c == best_count)
        merges.append(pair)
        words = {w: _merge_pair(s, pair) for w, s in words.items()}
    return BpeModel(merges=merges, n_operations=n_operations)


def _merge_pair(symbols, pair):
    merged = []
    i = 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def segment_word(model: BpeModel, word: str) -> list:
    """Split one word into BPE subunits, continuation-marked except the last."""
    symbols = tuple(word) + (BPE_EOW,)
    for pair in model.merges:
        if len(symbols) == 1:
            break
        symbols = _merge_pair(symbols, pair)
    if symbols[-1] == BPE_EOW:
        symbols = symbols[:-1]
    else:
        symbols = symbols[:-1] + (symbols[-1][: -len(BPE_EOW)],)
    return [s + BPE_CONT for s in symbols[:-1]] + [symbols[-1]]


def apply_bpe(model: BpeModel, sentence: Sentence) -> Sentence:
    out = []
    for token in sentence:
        out.extend(segment_word(model, token))
    return out


def debpe(sentence: Sentence) -> Sentence:
    """Rejoin continuation-marked subunits; inverse of apply_bpe."""
    out = []
    pending = ""
    for token in sentence:
        if token.endswith(BPE_CONT):
            pending += token[: -len(BPE_CONT)]
        else:
            out.append(pending + token)
            pending = ""
    if pending:
        out.append(pending)
    return out


def write_bpe_model(model: BpeModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("#version: 1\n")
        for a, b in model.merges:
            fh.write(f"{a} {b}\n")


def read_bpe_model(path) -> BpeModel:
    merges = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#version"):
            raise ParseError(path, 1, "missing #version header")
        for lineno, line in enumerate(fh, 2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) != 2:
                raise ParseError(path, lineno, f"bad merge rule {line!r}")
            merges.append((parts[0], parts[1]))
    return BpeModel(merges=merges, n_operations=max(len(merges), 1))


def length_filter(items, min_len: int = 3, max_len: int = 80):
    """Keep sentences (lists) or sentence pairs (tuples) within length bounds.

    Bounds are inclusive; a pair survives only if both sides do.
    """
    for item in items:
        if isinstance(item, tuple):
            if all(min_len <= len(side) <= max_len for side in item):
                yield item
        elif min_len <= len(item) <= max_len:
            yield item


DETERMINERS = ("the", "a", "an")
PREPOSITIONS = ("in", "on", "at", "for", "to", "of", "with", "by", "from")
_VERB_SUFFIXES = ("ing", "ed")
_SUFFIX_CHOICES = ("", "s", "ing", "ed")


@dataclass
class NoiseConfig:
    """Per-operation perturbation probabilities for the noise generator."""

    determiner_drop: float = 0.05
    determiner_insert: float = 0.05
    preposition_sub: float = 0.05
    verb_inflection: float = 0.05
    noun_number: float = 0.05
    token_swap: float = 0.05
    deletion: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        for name in (
            "determiner_drop",
            "determiner_insert",
            "preposition_sub",
            "verb_inflection",
            "noun_number",
            "token_swap",
            "deletion",
        ):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} probability {p} outside [0, 1]")


def _perturb(tokens: list, rng: random.Random, cfg: NoiseConfig) -> list:
    out = []
    for tok in tokens:
        low = tok.lower()
        if low in DETERMINERS and rng.random() < cfg.determiner_drop:
            continue
        if low in PREPOSITIONS and rng.random() < cfg.preposition_sub:
            alts = [p for p in PREPOSITIONS if p != low]
            tok = rng.choice(alts)
        elif tok.isalpha():
            suffix = next((s for s in _VERB_SUFFIXES if low.endswith(s)), None)
            if suffix is not None and len(tok) > 4 and rng.random() < cfg.verb_inflection:
                alts = [s for s in _SUFFIX_CHOICES if s != suffix]
                tok = tok[: -len(suffix)] + rng.choice(alts)
            elif rng.random() < cfg.noun_number:
                if low.endswith("s") and len(tok) > 3 and not low.endswith("ss"):
                    tok = tok[:-1]
                elif len(tok) > 2:
                    tok = tok + "s"
        out.append(tok)
    if cfg.determiner_insert > 0:
        inserted = []
        for tok in out:
            if rng.random() < cfg.determiner_insert:
                inserted.append(rng.choice(DETERMINERS))
            inserted.append(tok)
        out = inserted
    i = 0
    while i + 1 < len(out):
        if rng.random() < cfg.token_swap:
            out[i], out[i + 1] = out[i + 1], out[i]
            i += 2
        else:
            i += 1
    if cfg.deletion > 0 and len(out) > 1:
        kept = [t for t in out if rng.random() >= cfg.deletion]
        out = kept if kept else out[:1]
    return out


def synthesize_noise(corpus, cfg: NoiseConfig):
    """Independently perturb each sentence; pure function of (corpus, seed).

    The output stands in for a machine-translated learner-like corpus and is
    never paired with its input downstream.
    """
    for idx, sentence in enumerate(corpus):
        rng = random.Random(f"{cfg.rng_seed}:{idx}")
        yield _perturb(list(sentence), rng, cfg)


def read_corpus(path):
    """One tokenized sentence per line, tokens space-separated."""
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().split("\n") if line.strip()]


def write_corpus(sentences, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            fh.write(" ".join(sentence) + "\n")
