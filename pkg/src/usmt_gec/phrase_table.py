"""Phrase-table induction from cross-mapped embeddings.

Translation probabilities are temperature-scaled softmaxes of cosine
similarities restricted to each phrase's nearest-neighbor candidate set;
lexical weights take, per word, the best word-level translation probability
with an epsilon floor for uncovered words.  The temperature is fit by
maximizing the probability of a dictionary induced in the reverse direction
(nearest source neighbor of each target entry), which keeps the optimum off
the tau -> 0 degeneracy.
"""

from __future__ import annotations

import gzip
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingMatrix, unit_rows
from .errors import ParseError

EPSILON = 0.001
LOG_TAU_BOUNDS = (-5.0, 5.0)


@dataclass
class Temperature:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


@dataclass
class PhraseTableEntry:
    source_phrase: tuple
    target_phrase: tuple
    phi_fwd: float
    lex_fwd: float
    phi_bwd: float
    lex_bwd: float

    def __post_init__(self):
        if not self.source_phrase or not self.target_phrase:
            raise ValueError("phrases must be nonempty")
        for name in ("phi_fwd", "lex_fwd", "phi_bwd", "lex_bwd"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name}={v} outside (0, 1]")


@dataclass
class PhraseTable:
    """Entries grouped by source phrase, at most neighbor_limit per group."""

    by_source: dict = field(default_factory=dict)
    neighbor_limit: int = 100

    def options(self, source_phrase) -> list:
        return self.by_source.get(tuple(source_phrase), [])

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_source.values())

    def __iter__(self):
        for source in self.by_source:
            yield from self.by_source[source]

    def add(self, entry: PhraseTableEntry) -> None:
        group = self.by_source.setdefault(entry.source_phrase, [])
        if len(group) >= self.neighbor_limit:
            raise ValueError(
                f"more than {self.neighbor_limit} targets for {entry.source_phrase}"
            )
        group.append(entry)


def phrase_translation_probs(e_vec, candidates, tau: float) -> list:
    """Softmax over cos(e, candidate)/tau restricted to the candidate set."""
    if not candidates:
        raise ValueError("empty candidate set")
    if not tau > 0:
        raise ValueError("tau must be positive")
    e = np.asarray(e_vec, dtype=np.float64)
    e = e / np.linalg.norm(e)
    phrases = [phrase for phrase, _ in candidates]
    vecs = unit_rows(np.asarray([vec for _, vec in candidates], dtype=np.float64))
    cosines = vecs @ e
    scaled = cosines / tau
    scaled -= scaled.max()
    weights = np.exp(scaled)
    probs = weights / weights.sum()
    return list(zip(phrases, probs.tolist()))


def _softmax_rows(cosines: np.ndarray, tau: float) -> np.ndarray:
    scaled = cosines / tau
    scaled = scaled - scaled.max(axis=1, keepdims=True)
    w = np.exp(scaled)
    return w / w.sum(axis=1, keepdims=True)


def _top_neighbors(cosines: np.ndarray, k: int) -> np.ndarray:
    """Per row, indices of the k best columns, ties broken by index."""
    n_rows, n_cols = cosines.shape
    k = min(k, n_cols)
    out = np.empty((n_rows, k), dtype=np.int64)
    for r in range(n_rows):
        row = cosines[r]
        if k < n_cols:
            part = np.argpartition(-row, k - 1)[:k]
        else:
            part = np.arange(n_cols)
        order = sorted(part.tolist(), key=lambda j: (-row[j], j))
        out[r] = order
    return out


def temperature_objective(
    emb_src: EmbeddingMatrix,
    emb_tgt: EmbeddingMatrix,
    neighbor_limit: int = 100,
    sample: int = 10000,
    seed: int = 0,
):
    """Mean reverse-dictionary translation probability as a function of tau.

    For each sampled target entry f, take its nearest source neighbor e and
    the probability phi(f | e) over e's candidate set (f forced in).
    """
    src = unit_rows(emb_src.vectors)
    tgt = unit_rows(emb_tgt.vectors)
    rng = np.random.RandomState(seed)
    n_tgt = tgt.shape[0]
    picks = (
        rng.choice(n_tgt, size=sample, replace=False) if n_tgt > sample else np.arange(n_tgt)
    )
    rev_cos = tgt[picks] @ src.T
    nearest_src = rev_cos.argmax(axis=1)
    fwd_cos = src[nearest_src] @ tgt.T
    k = min(neighbor_limit, tgt.shape[0])
    neighbors = _top_neighbors(fwd_cos, k)
    rows = np.arange(len(picks))
    # candidate cosines per pair, with the paired target forced into the set
    cand_cos = np.take_along_axis(fwd_cos, neighbors, axis=1)
    pair_cos = fwd_cos[rows, picks]
    in_set = (neighbors == picks[:, None]).any(axis=1)
    cand_cos = np.concatenate([cand_cos, pair_cos[:, None]], axis=1)

    def objective(tau: float) -> float:
        scaled = cand_cos / tau
        scaled = scaled - scaled.max(axis=1, keepdims=True)
        w = np.exp(scaled)
        # the paired target is appended as the last column; drop the
        # duplicate from the denominator when it was already retrieved
        denom = w.sum(axis=1) - w[:, -1] * in_set
        prob = w[:, -1] / denom
        return float(prob.mean())

    return objective


def golden_section_maximize(fn, lo: float, hi: float, tol: float = 1e-4):
    """Golden-section search for the maximum of a unimodal function."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def estimate_temperature(
    emb_src: EmbeddingMatrix,
    emb_tgt: EmbeddingMatrix,
    neighbor_limit: int = 100,
    sample: int = 10000,
    seed: int = 0,
    tol: float = 1e-4,
) -> Temperature:
    """Fit tau by golden-section search on log tau in [-5, 5]."""
    objective = temperature_objective(emb_src, emb_tgt, neighbor_limit, sample, seed)
    lo, hi = LOG_TAU_BOUNDS
    probes = np.linspace(lo, hi, 16)
    values = [objective(math.exp(x)) for x in probes]
    if max(values) - min(values) < 1e-12:
        warnings.warn("degenerate embeddings: flat objective, tau capped at bound")
        return Temperature(tau=math.exp(lo))
    log_tau, _ = golden_section_maximize(lambda x: objective(math.exp(x)), lo, hi, tol)
    if min(log_tau - lo, hi - log_tau) < 2 * tol:
        warnings.warn(f"tau estimate at search bound (log tau = {log_tau:.4f})")
    return Temperature(tau=math.exp(log_tau))


def lexical_weight(
    src_phrase, tgt_phrase, unigram_phi: dict, epsilon: float = EPSILON
) -> float:
    """Eq.-style product over target words of the best word translation
    probability against any source word, floored at epsilon."""
    if not tgt_phrase:
        raise ValueError("empty target phrase")
    if not src_phrase:
        raise ValueError("empty source phrase")
    weight = 1.0
    for t in tgt_phrase:
        best = max(unigram_phi.get((s, t), 0.0) for s in src_phrase)
        weight *= max(epsilon, best)
    return weight


def _word_phi(cosines: np.ndarray, neighbor_limit: int, tau: float, src_words, tgt_words):
    """Word-level phi(tgt | src) over each source word's candidate set."""
    table = {}
    neighbors = _top_neighbors(cosines, min(neighbor_limit, cosines.shape[1]))
    for r, row_neighbors in enumerate(neighbors):
        cand = cosines[r, row_neighbors]
        probs = _softmax_rows(cand[None, :], tau)[0]
        for j, p in zip(row_neighbors, probs):
            table[(src_words[r], tgt_words[j])] = float(p)
    return table


def induce_table(
    emb_src: EmbeddingMatrix,
    emb_tgt: EmbeddingMatrix,
    tau: float,
    neighbor_limit: int = 100,
    epsilon: float = EPSILON,
    backward_mode: str = "independent",
) -> PhraseTable:
    """Build the initial phrase table from mapped embeddings.

    Forward scores come from each source phrase's nearest-neighbor candidate
    set (Eq. 1 softmax, Eq. 2 lexical weight).  Backward phi comes from the
    independent target-side retrieval when the pair appears there; otherwise
    (or always, under backward_mode="renormalize") it is recomputed over the
    forward pair list for that target, floored at epsilon.
    """
    if backward_mode not in ("independent", "renormalize"):
        raise ValueError(f"unknown backward_mode {backward_mode!r}")
    if not len(emb_src.ngrams) or not len(emb_tgt.ngrams):
        raise ValueError("empty vocabulary")
    src = unit_rows(emb_src.vectors)
    tgt = unit_rows(emb_tgt.vectors)
    cosines = src @ tgt.T

    k_fwd = min(neighbor_limit, tgt.shape[0])
    fwd_neighbors = _top_neighbors(cosines, k_fwd)

    # word-level translation probabilities for the lexical weights
    src_uni = [i for i, ng in enumerate(emb_src.ngrams) if len(ng) == 1]
    tgt_uni = [j for j, ng in enumerate(emb_tgt.ngrams) if len(ng) == 1]
    src_words = [emb_src.ngrams[i][0] for i in src_uni]
    tgt_words = [emb_tgt.ngrams[j][0] for j in tgt_uni]
    uni_cos = cosines[np.ix_(src_uni, tgt_uni)]
    phi_word_fwd = _word_phi(uni_cos, neighbor_limit, tau, src_words, tgt_words)
    phi_word_bwd = _word_phi(uni_cos.T, neighbor_limit, tau, tgt_words, src_words)

    # backward retrieval: each target phrase's candidate source set
    bwd_probs = {}
    if backward_mode == "independent":
        k_bwd = min(neighbor_limit, src.shape[0])
        bwd_neighbors = _top_neighbors(cosines.T, k_bwd)
        for j in range(tgt.shape[0]):
            cand = cosines.T[j, bwd_neighbors[j]]
            probs = _softmax_rows(cand[None, :], tau)[0]
            for i, p in zip(bwd_neighbors[j], probs):
                bwd_probs[(int(i), j)] = float(p)

    # forward pair lists grouped by target, for the fallback renormalization
    by_target = {}
    for i in range(src.shape[0]):
        for j in fwd_neighbors[i]:
            by_target.setdefault(int(j), []).append(i)
    fallback = {}
    for j, sources in by_target.items():
        cand = cosines[sources, j]
        probs = _softmax_rows(cand[None, :], tau)[0]
        for i, p in zip(sources, probs):
            fallback[(int(i), int(j))] = float(p)

    table = PhraseTable(neighbor_limit=neighbor_limit)
    for i in range(src.shape[0]):
        cand = cosines[i, fwd_neighbors[i]]
        probs = _softmax_rows(cand[None, :], tau)[0]
        source_phrase = emb_src.ngrams[i]
        for j, phi_f in zip(fwd_neighbors[i], probs):
            target_phrase = emb_tgt.ngrams[int(j)]
            pair = (int(i), int(j))
            phi_b = bwd_probs.get(pair)
            if phi_b is None:
                phi_b = max(epsilon, fallback[pair])
            table.add(
                PhraseTableEntry(
                    source_phrase=source_phrase,
                    target_phrase=target_phrase,
                    phi_fwd=float(phi_f),
                    lex_fwd=lexical_weight(source_phrase, target_phrase, phi_word_fwd, epsilon),
                    phi_bwd=phi_b,
                    lex_bwd=lexical_weight(target_phrase, source_phrase, phi_word_bwd, epsilon),
                )
            )
    return table


def _open_table(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def write_table(table: PhraseTable, path) -> None:
    """One entry per line: "src ||| tgt ||| phi_fwd lex_fwd phi_bwd lex_bwd"."""
    with _open_table(path, "w") as fh:
        for entry in table:
            scores = " ".join(
                f"{v:.6g}"
                for v in (entry.phi_fwd, entry.lex_fwd, entry.phi_bwd, entry.lex_bwd)
            )
            fh.write(
                f"{' '.join(entry.source_phrase)} ||| "
                f"{' '.join(entry.target_phrase)} ||| {scores}\n"
            )


def read_table(path, neighbor_limit: int = 100) -> PhraseTable:
    table = PhraseTable(neighbor_limit=neighbor_limit)
    with _open_table(path, "r") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(" ||| ")
            if len(fields) != 3:
                raise ParseError(path, lineno, f"expected 3 fields, got {len(fields)}")
            scores = fields[2].split()
            if len(scores) != 4:
                raise ParseError(path, lineno, f"expected 4 scores, got {len(scores)}")
            try:
                phi_fwd, lex_fwd, phi_bwd, lex_bwd = (float(s) for s in scores)
            except ValueError:
                raise ParseError(path, lineno, f"bad score in {fields[2]!r}") from None
            table.add(
                PhraseTableEntry(
                    source_phrase=tuple(fields[0].split()),
                    target_phrase=tuple(fields[1].split()),
                    phi_fwd=phi_fwd,
                    lex_fwd=lex_fwd,
                    phi_bwd=phi_bwd,
                    lex_bwd=lex_bwd,
                )
            )
    return table
