"""Backoff n-gram language models over surface tokens or word classes.

Training uses interpolated modified Kneser-Ney smoothing, falling back to
interpolated Witten-Bell when the corpus is too small to estimate the KN
discounts (every order needs nonzero counts-of-counts n1..n4).  Scores are
log10 throughout, as in the ARPA format.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .corpus import Sentence
from .errors import ParseError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
_LOG10_BOS = -99.0


@dataclass
class NGramLanguageModel:
    """ARPA-style model: log10 probabilities plus log10 backoff weights."""

    order: int
    prob: dict = field(default_factory=dict)
    backoff: dict = field(default_factory=dict)
    vocab: set = field(default_factory=set)
    smoothing: str = "modified-kneser-ney"

    def initial_state(self) -> tuple:
        return (BOS,) if self.order > 1 else ()

    def map_token(self, token: str) -> str:
        return token if (token,) in self.prob else UNK


def _raw_counts(corpus, order, unk_singletons):
    unigram = Counter()
    sentences = []
    n_sentences = 0
    for sentence in corpus:
        sentences.append(list(sentence))
        unigram.update(sentence)
        n_sentences += 1
    if n_sentences == 0:
        raise ValueError("cannot train a language model on an empty corpus")
    singletons = (
        {w for w, c in unigram.items() if c == 1} if unk_singletons else set()
    )
    counts = [Counter() for _ in range(order + 1)]
    for sentence in sentences:
        seq = [BOS] + [UNK if t in singletons else t for t in sentence] + [EOS]
        for k in range(1, order + 1):
            for i in range(len(seq) - k + 1):
                counts[k][tuple(seq[i : i + k])] += 1
    return counts


def _adjusted_counts(raw, order):
    """Continuation counts for lower orders; BOS-initial grams keep raw."""
    adj = [None] * (order + 1)
    adj[order] = dict(raw[order])
    for k in range(order - 1, 0, -1):
        a = defaultdict(int)
        for gram, c in raw[k].items():
            if gram[0] == BOS:
                a[gram] = c
        for gram in raw[k + 1]:
            suffix = gram[1:]
            if suffix[0] != BOS:
                a[suffix] += 1
        for gram in raw[k]:
            a.setdefault(gram, 0)
        adj[k] = dict(a)
    return adj


def _kn_discounts(values):
    """Chen-Goodman discounts D1/D2/D3+ from counts-of-counts, or None."""
    cc = Counter(values)
    n1, n2, n3, n4 = cc[1], cc[2], cc[3], cc[4]
    if not (n1 and n2 and n3 and n4):
        return None
    y = n1 / (n1 + 2 * n2)
    d = {1: 1 - 2 * y * n2 / n1, 2: 2 - 3 * y * n3 / n2, 3: 3 - 4 * y * n4 / n3}
    if any(not 0 < v for v in d.values()):
        return None
    return d


def _discount_of(d, count):
    return d[min(count, 3)] if count > 0 else 0.0


def train_lm(corpus, order: int = 5, unk_singletons: bool = True) -> NGramLanguageModel:
    """Train an interpolated backoff model with begin/end sentence markers.

    ``unk_singletons`` maps words seen once to the unknown symbol during
    counting, giving the unknown word a data-driven probability.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    raw = _raw_counts(corpus, order, unk_singletons)
    adj = _adjusted_counts(raw, order)
    vocab = {gram[0] for gram in raw[1] if gram[0] != BOS}
    vocab |= {EOS, UNK}
    discounts = {
        k: _kn_discounts([v for v in adj[k].values() if v > 0])
        for k in range(1, order + 1)
    }
    if all(d is not None for d in discounts.values()):
        prob, backoff = _estimate_kn(adj, vocab, order, discounts)
        smoothing = "modified-kneser-ney"
    else:
        prob, backoff = _estimate_wb(raw, vocab, order)
        smoothing = "witten-bell"
    if order > 1:
        prob[(BOS,)] = _LOG10_BOS
    return NGramLanguageModel(
        order=order, prob=prob, backoff=backoff, vocab=vocab, smoothing=smoothing
    )


def _estimate_kn(adj, vocab, order, discounts):
    nvocab = len(vocab)
    d1 = discounts[1]
    denom = sum(adj[1].get((w,), 0) for w in vocab)
    cat = Counter(min(adj[1].get((w,), 0), 3) for w in vocab if adj[1].get((w,), 0))
    gamma = sum(d1[c] * cat[c] for c in (1, 2, 3)) / denom
    p = {}
    for w in vocab:
        a = adj[1].get((w,), 0)
        p[(w,)] = max(a - _discount_of(d1, a), 0.0) / denom + gamma / nvocab
    bow = {(): gamma}
    for k in range(2, order + 1):
        dk = discounts[k]
        by_ctx = defaultdict(dict)
        for gram, a in adj[k].items():
            if a > 0:
                by_ctx[gram[:-1]][gram[-1]] = a
        for ctx, conts in by_ctx.items():
            ctx_total = sum(conts.values())
            cat = Counter(min(a, 3) for a in conts.values())
            gamma = sum(dk[c] * cat[c] for c in (1, 2, 3)) / ctx_total
            bow[ctx] = gamma
            for w, a in conts.items():
                lower = p.get(ctx[1:] + (w,), p.get((w,)))
                p[ctx + (w,)] = (
                    max(a - _discount_of(dk, a), 0.0) / ctx_total + gamma * lower
                )
    return _to_log10(p, bow)


def _estimate_wb(raw, vocab, order):
    """Interpolated Witten-Bell over raw counts (small-corpus fallback)."""
    nvocab = len(vocab)
    total = sum(raw[1].get((w,), 0) for w in vocab)
    distinct = sum(1 for w in vocab if raw[1].get((w,), 0))
    p = {}
    for w in vocab:
        c = raw[1].get((w,), 0)
        p[(w,)] = (c + distinct / nvocab) / (total + distinct)
    bow = {(): distinct / (total + distinct)}
    for k in range(2, order + 1):
        by_ctx = defaultdict(dict)
        for gram, c in raw[k].items():
            by_ctx[gram[:-1]][gram[-1]] = c
        for ctx, conts in by_ctx.items():
            ctx_total = sum(conts.values())
            n1plus = len(conts)
            lam = n1plus / (ctx_total + n1plus)
            bow[ctx] = lam
            for w, c in conts.items():
                lower = p.get(ctx[1:] + (w,), p.get((w,)))
                p[ctx + (w,)] = (c + n1plus * lower) / (ctx_total + n1plus)
    return _to_log10(p, bow)


def _to_log10(p, bow):
    prob = {gram: math.log10(v) for gram, v in p.items()}
    backoff = {ctx: math.log10(v) if v > 0 else 0.0 for ctx, v in bow.items()}
    return prob, backoff


def score_state(lm: NGramLanguageModel, state: tuple, token: str):
    """Incremental log10 score of one token given an LM context state."""
    w = lm.map_token(token)
    gram = (tuple(state) + (w,))[-lm.order :]
    lp = 0.0
    while gram not in lm.prob and len(gram) > 1:
        lp += lm.backoff.get(gram[:-1], 0.0)
        gram = gram[1:]
    lp += lm.prob[gram]
    new_state = (tuple(state) + (w,))[-(lm.order - 1) :] if lm.order > 1 else ()
    return lp, new_state


def score(lm: NGramLanguageModel, sentence: Sentence) -> float:
    """Full-sentence log10 probability including the end marker."""
    state = lm.initial_state()
    total = 0.0
    for token in list(sentence) + [EOS]:
        lp, state = score_state(lm, state, token)
        total += lp
    return total


def perplexity(lm: NGramLanguageModel, corpus) -> float:
    total_lp = 0.0
    n_tokens = 0
    for sentence in corpus:
        total_lp += score(lm, sentence)
        n_tokens += len(sentence) + 1
    if n_tokens == 0:
        raise ValueError("empty corpus")
    return 10.0 ** (-total_lp / n_tokens)


def write_arpa(lm: NGramLanguageModel, path) -> None:
    """Standard ARPA text format; floats printed at round-trip precision."""
    by_order = defaultdict(list)
    for gram in lm.prob:
        by_order[len(gram)].append(gram)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\\data\\\n")
        for k in range(1, lm.order + 1):
            fh.write(f"ngram {k}={len(by_order[k])}\n")
        for k in range(1, lm.order + 1):
            fh.write(f"\n\\{k}-grams:\n")
            for gram in sorted(by_order[k]):
                line = f"{lm.prob[gram]!r}\t{' '.join(gram)}"
                if gram in lm.backoff:
                    line += f"\t{lm.backoff[gram]!r}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


def read_arpa(path) -> NGramLanguageModel:
    prob = {}
    backoff = {}
    order = 0
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    section = None
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line == "\\data\\" or line.startswith("ngram "):
            continue
        if line == "\\end\\":
            break
        if line.endswith("-grams:") and line.startswith("\\"):
            section = int(line[1:].split("-")[0])
            order = max(order, section)
            continue
        if section is None:
            raise ParseError(path, lineno, f"unexpected line {line!r}")
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise ParseError(path, lineno, f"expected 2 or 3 fields, got {len(parts)}")
        gram = tuple(parts[1].split(" "))
        if len(gram) != section:
            raise ParseError(path, lineno, f"{len(gram)}-gram in {section}-gram section")
        prob[gram] = float(parts[0])
        if len(parts) == 3:
            backoff[gram] = float(parts[2])
    vocab = {g[0] for g in prob if len(g) == 1 and g[0] != BOS}
    return NGramLanguageModel(order=order, prob=prob, backoff=backoff, vocab=vocab)


@dataclass
class WordClassMap:
    """Total map token -> class id in [0, n_classes); unknowns share class 0."""

    class_of: dict
    n_classes: int

    def token_class(self, token: str) -> int:
        return self.class_of.get(token, 0)

    def to_class_tokens(self, sentence: Sentence) -> Sentence:
        return [f"C{self.token_class(t)}" for t in sentence]


def _kmeans(matrix, k, iterations, rng):
    n = matrix.shape[0]
    centers = np.empty((k, matrix.shape[1]), dtype=np.float64)
    centers[0] = matrix[rng.randint(n)]
    d2 = ((matrix - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            centers[c] = matrix[rng.randint(n)]
            continue
        centers[c] = matrix[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, ((matrix - centers[c]) ** 2).sum(axis=1))
    assign = None
    for _ in range(iterations):
        dists = (
            (matrix**2).sum(axis=1, keepdims=True)
            - 2 * matrix @ centers.T
            + (centers**2).sum(axis=1)
        )
        assign = dists.argmin(axis=1)
        for c in range(k):
            members = matrix[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                centers[c] = matrix[dists.min(axis=1).argmax()]
    return assign


def induce_classes(tokens, matrix, k: int = 200, iterations: int = 20, seed: int = 0):
    """Cluster unigram embeddings into k word classes (k-means++, fixed seed)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if len(tokens) != matrix.shape[0]:
        raise ValueError("token list and embedding rows disagree")
    n_distinct = len(np.unique(matrix, axis=0))
    if n_distinct < k:
        warnings.warn(
            f"only {n_distinct} distinct vectors; reducing classes from {k}"
        )
        k = max(1, n_distinct)
    rng = np.random.RandomState(seed)
    assign = _kmeans(matrix, k, iterations, rng)
    return WordClassMap(
        class_of={t: int(c) for t, c in zip(tokens, assign)}, n_classes=k
    )


def train_class_lm(
    corpus, class_map: WordClassMap, order: int = 9
) -> NGramLanguageModel:
    """Train an n-gram model over class-id tokens."""
    mapped = (class_map.to_class_tokens(s) for s in corpus)
    return train_lm(mapped, order, unk_singletons=False)
