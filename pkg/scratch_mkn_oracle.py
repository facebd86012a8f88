"""Independent interpolated modified-KN oracle with exact fractions.

Direct transcription of the Chen-Goodman formulas, dict-based, no arrays.
Used to derive frozen expected values for the LM tests; independent of the
package implementation.
"""
from collections import Counter, defaultdict
from fractions import Fraction as F

BOS, EOS, UNK = "<s>", "</s>", "<unk>"


def raw_counts(sentences, order):
    counts = [Counter() for _ in range(order + 1)]  # index by k
    for s in sentences:
        seq = [BOS] + s + [EOS]
        for k in range(1, order + 1):
            for i in range(len(seq) - k + 1):
                counts[k][tuple(seq[i : i + k])] += 1
    return counts


def adjusted_counts(raw, order):
    adj = [None] * (order + 1)
    adj[order] = dict(raw[order])
    for k in range(order - 1, 0, -1):
        a = defaultdict(int)
        for gram in raw[k]:
            if gram[0] == BOS:
                a[gram] = raw[k][gram]
        for gram_k1 in raw[order and k + 1]:
            suffix = gram_k1[1:]
            if suffix and suffix[0] != BOS:
                a[suffix] += 1
        # grams never appearing as suffix of a (k+1)-gram but counted raw
        for gram in raw[k]:
            if gram not in a:
                a[gram] = 0
        adj[k] = dict(a)
    return adj


def discounts(values):
    cc = Counter(values)
    n1, n2, n3, n4 = cc[1], cc[2], cc[3], cc[4]
    assert n1 and n2 and n3 and n4, f"counts-of-counts with zeros: {n1},{n2},{n3},{n4}"
    Y = F(n1, n1 + 2 * n2)
    D1 = 1 - 2 * Y * F(n2, n1)
    D2 = 2 - 3 * Y * F(n3, n2)
    D3 = 3 - 4 * Y * F(n4, n3)
    return {1: D1, 2: D2, 3: D3}


def D_of(d, count):
    if count == 0:
        return F(0)
    return d[min(count, 3)]


def mkn(sentences, order):
    raw = raw_counts(sentences, order)
    adj = adjusted_counts(raw, order)
    vocab = sorted({w for s in sentences for w in s} | {EOS, UNK})
    V = len(vocab)
    d_per_order = {k: discounts([v for v in adj[k].values() if v > 0]) for k in range(1, order + 1)}

    # unigram level
    d1 = d_per_order[1]
    denom1 = sum(adj[1].get((w,), 0) for w in vocab)
    n_cat = {1: 0, 2: 0, 3: 0}
    for w in vocab:
        a = adj[1].get((w,), 0)
        if a > 0:
            n_cat[min(a, 3)] += 1
    gamma1 = sum(d1[c] * n_cat[c] for c in (1, 2, 3)) / denom1
    p = {}
    for w in vocab:
        a = adj[1].get((w,), 0)
        p[(w,)] = max(a - D_of(d1, a), 0) / denom1 + gamma1 * F(1, V)
    bow = {(): gamma1}

    for k in range(2, order + 1):
        dk = d_per_order[k]
        by_ctx = defaultdict(dict)
        for gram, a in adj[k].items():
            if a > 0:
                by_ctx[gram[:-1]][gram[-1]] = a
        for ctx, conts in by_ctx.items():
            denom = sum(conts.values())
            n_cat = {1: 0, 2: 0, 3: 0}
            for a in conts.values():
                n_cat[min(a, 3)] += 1
            gamma = sum(dk[c] * n_cat[c] for c in (1, 2, 3)) / denom
            bow[ctx] = gamma
            for w, a in conts.items():
                lower = p[ctx[1:] + (w,)] if ctx[1:] + (w,) in p else p[(w,)]
                p[ctx + (w,)] = max(a - D_of(dk, a), 0) / denom + gamma * lower
    return p, bow, vocab


def backoff_prob(p, bow, gram):
    if gram in p:
        return p[gram]
    if len(gram) == 1:
        raise KeyError(gram)
    return bow.get(gram[:-1], F(1)) * backoff_prob(p, bow, gram[1:])


CORPUS = [
    ["a", "b"],
    ["a", "b"],
    ["a", "b"],
    ["a", "b"],
    ["c", "d"],
    ["c", "d"],
    ["c", "d"],
    ["e", "f"],
    ["e", "f"],
    ["g", "h"],
    ["b", "a"],
    ["a", "d", "e"],
    ["h", "d", "b"],
    ["f", "d", "c", "b"],
    ["c", "e"],
]

if __name__ == "__main__":
    order = 2
    raw = raw_counts(CORPUS, order)
    adj = adjusted_counts(raw, order)
    print("bigram counts-of-counts:", Counter(v for v in adj[2].values() if v > 0))
    uni_vals = [v for g, v in adj[1].items() if v > 0 and g[0] != BOS]
    print("unigram adjusted counts:", sorted(adj[1].items()))
    print("unigram counts-of-counts:", Counter(uni_vals))
    p, bow, vocab = mkn(CORPUS, order)
    print("vocab:", vocab, len(vocab))
    # normalization check at several contexts
    for ctx in [("a",), ("d",), ("zzz",), (BOS,)]:
        total = sum(backoff_prob(p, bow, (ctx[-1],) if ctx[-1] in [w for (w,) in p] else ctx, ) for w in [])
    for ctx in [("a",), ("d",), ("q",), (BOS,)]:
        s = F(0)
        for w in vocab:
            s += backoff_prob(p, bow, ctx + (w,))
        print("sum over vocab given", ctx, "=", s, float(s))
    for gram in [("a",), ("b",), (EOS,), (UNK,), ("a", "b"), ("d", "c"), ("a", "d"), (BOS, "a"), ("b", EOS), ("a", EOS), ("c", "b")]:
        val = backoff_prob(p, bow, gram)
        print("p", gram, "=", val, "=", float(val))
    for ctx in [("a",), ("d",), (BOS,), ("b",)]:
        print("bow", ctx, "=", bow.get(ctx), float(bow.get(ctx)))
