"""N-gram embeddings and unsupervised cross-lingual mapping.

Each side trains skip-gram-with-negative-sampling embeddings where every
in-vocabulary unigram/bigram/trigram occurrence predicts the unigram tokens
around its span.  The two spaces are then aligned by iterative self-learning:
orthogonal Procrustes on a seed dictionary, CSLS-based dictionary
re-induction with annealed stochastic dropout, and a final symmetric
re-weighting by the singular values of the dictionary cross-covariance.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

DEFAULT_CUTOFFS = (200000, 400000, 400000)


@dataclass
class NGramVocabulary:
    """Frequency-ranked unigram/bigram/trigram inventory."""

    entries: list = field(default_factory=list)  # (ngram tuple, frequency)
    cutoffs: tuple = DEFAULT_CUTOFFS

    def __post_init__(self):
        self.index = {ngram: i for i, (ngram, _) in enumerate(self.entries)}

    @property
    def ngrams(self) -> list:
        return [ngram for ngram, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def build_ngram_vocab(corpus, cutoffs=DEFAULT_CUTOFFS) -> NGramVocabulary:
    """Top-k n-grams per order (k from cutoffs); frequency ties break
    lexicographically."""
    counts = [Counter() for _ in range(len(cutoffs))]
    empty = True
    for sentence in corpus:
        empty = False
        for n, counter in enumerate(counts, start=1):
            for i in range(len(sentence) - n + 1):
                counter[tuple(sentence[i : i + n])] += 1
    if empty:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    entries = []
    for counter, cutoff in zip(counts, cutoffs):
        ranked = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))
        entries.extend(ranked[:cutoff])
    return NGramVocabulary(entries=entries, cutoffs=tuple(cutoffs))


@dataclass
class EmbeddingMatrix:
    """One vector per vocabulary n-gram."""

    ngrams: list
    vectors: np.ndarray
    loss_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if len(self.ngrams) != self.vectors.shape[0]:
            raise ValueError("ngram list and vector rows disagree")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("non-finite embedding values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row_index(self) -> dict:
        return {ng: i for i, ng in enumerate(self.ngrams)}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def train_ngram_embeddings(
    corpus,
    vocab: NGramVocabulary,
    dim: int = 300,
    window: int = 5,
    negatives: int = 10,
    epochs: int = 5,
    learning_rate: float = 0.025,
    seed: int = 0,
) -> EmbeddingMatrix:
    """Skip-gram with negative sampling over n-gram centers.

    A center n-gram occurrence predicts in-vocabulary unigram tokens within
    ``window`` positions outside its span.  The learning rate decays linearly
    over all (epoch, occurrence) steps.  Deterministic for a fixed seed.
    Returns vectors with a per-epoch loss history on a frozen probe batch.
    """
    sentences = [list(s) for s in corpus]
    rng = np.random.RandomState(seed)
    n_entries = len(vocab)
    vectors = (rng.rand(n_entries, dim) - 0.5) / dim
    max_order = max((len(ng) for ng in vocab.ngrams), default=1)

    context_tokens = sorted({ng[0] for ng in vocab.ngrams if len(ng) == 1})
    ctx_index = {t: i for i, t in enumerate(context_tokens)}
    contexts = np.zeros((len(context_tokens), dim))
    if not context_tokens:
        raise ValueError("vocabulary has no unigrams to serve as contexts")

    ctx_freq = np.array(
        [vocab.entries[vocab.index[(t,)]][1] for t in context_tokens], dtype=float
    )
    noise = ctx_freq**0.75
    noise /= noise.sum()

    pairs = []  # (center row, context column) occurrences, corpus order
    for sentence in sentences:
        length = len(sentence)
        for i in range(length):
            for n in range(1, max_order + 1):
                if i + n > length:
                    break
                row = vocab.index.get(tuple(sentence[i : i + n]))
                if row is None:
                    continue
                lo = max(0, i - window)
                for j in list(range(lo, i)) + list(range(i + n, min(length, i + n + window))):
                    col = ctx_index.get(sentence[j])
                    if col is not None:
                        pairs.append((row, col))
    touched = np.zeros(n_entries, dtype=bool)
    for row, _ in pairs:
        touched[row] = True
    if not np.all(touched) and n_entries:
        warnings.warn(
            f"{int((~touched).sum())} vocabulary n-grams never occur with a "
            "context; their rows stay at initialization"
        )

    probe = pairs[:1000]
    probe_negs = rng.choice(len(context_tokens), size=(len(probe), max(negatives, 1)), p=noise)

    def probe_loss():
        if not probe:
            return 0.0
        loss = 0.0
        for (row, col), negs in zip(probe, probe_negs):
            w = vectors[row]
            loss -= math.log(max(_sigmoid(w @ contexts[col]), 1e-12))
            for neg in negs:
                loss -= math.log(max(_sigmoid(-w @ contexts[neg]), 1e-12))
        return loss / len(probe)

    history = [probe_loss()]
    total_steps = max(len(pairs) * epochs, 1)
    step = 0
    for _ in range(epochs if pairs else 0):
        epoch_negs = rng.choice(
            len(context_tokens), size=(len(pairs), negatives), p=noise
        )
        for (row, col), negs in zip(pairs, epoch_negs):
            lr = learning_rate * max(1.0 - step / total_steps, 1e-4)
            step += 1
            w = vectors[row]
            grad_w = np.zeros(dim)
            g = (1.0 - _sigmoid(w @ contexts[col])) * lr
            grad_w += g * contexts[col]
            contexts[col] += g * w
            for neg in negs:
                if neg == col:
                    continue
                g = -_sigmoid(w @ contexts[neg]) * lr
                grad_w += g * contexts[neg]
                contexts[neg] += g * w
            vectors[row] = w + grad_w
        history.append(probe_loss())
    return EmbeddingMatrix(
        ngrams=list(vocab.ngrams), vectors=vectors, loss_history=history
    )


def unit_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale rows to unit length; zero rows stay zero."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return np.divide(matrix, norms, out=np.zeros_like(matrix), where=norms > 0)


def normalize_embeddings(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    """Unit rows, mean-center each dimension, unit rows again."""
    step1 = unit_rows(emb.vectors)
    centered = step1 - step1.mean(axis=0)
    out = unit_rows(centered)
    zero = np.flatnonzero(np.linalg.norm(out, axis=1) == 0)
    if zero.size:
        warnings.warn(f"{zero.size} zero rows after normalization")
    return EmbeddingMatrix(ngrams=list(emb.ngrams), vectors=out)


def _top_k_means(sim: np.ndarray, k: int) -> np.ndarray:
    """Row-wise mean of the k largest similarities."""
    k = min(k, sim.shape[1])
    if k <= 0:
        return np.zeros(sim.shape[0])
    part = np.partition(sim, sim.shape[1] - k, axis=1)[:, sim.shape[1] - k :]
    return part.mean(axis=1)


def csls_matrix(queries: np.ndarray, candidates: np.ndarray, penalty_k: int = 10):
    """CSLS scores for all query/candidate pairs of unit-row matrices."""
    sim = queries @ candidates.T
    r_q = _top_k_means(sim, penalty_k)
    r_c = _top_k_means(sim.T, penalty_k)
    return 2 * sim - r_q[:, None] - r_c[None, :]


def csls_neighbors(
    query: np.ndarray,
    candidates: np.ndarray,
    k: int,
    queries: np.ndarray = None,
    metric: str = "csls",
    penalty_k: int = 10,
) -> list:
    """Ranked (index, score) list; ties break on the lower index.

    ``queries`` supplies the query-side population for the CSLS hubness
    penalty; it defaults to the single query vector.
    """
    if k > candidates.shape[0]:
        raise ValueError("k exceeds candidate count")
    q = unit_rows(np.asarray(query, dtype=np.float64).reshape(1, -1))
    cands = unit_rows(np.asarray(candidates, dtype=np.float64))
    if metric == "cosine":
        scores = (q @ cands.T)[0]
    elif metric == "csls":
        pop = q if queries is None else unit_rows(np.asarray(queries, dtype=np.float64))
        sim_pop = pop @ cands.T
        r_c = _top_k_means(sim_pop.T, penalty_k)
        sim = (q @ cands.T)[0]
        r_q = _top_k_means(sim.reshape(1, -1), penalty_k)[0]
        scores = 2 * sim - r_q - r_c
    else:
        raise ValueError(f"unknown metric {metric!r}")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    return [(i, float(scores[i])) for i in order[:k]]


@dataclass
class CrossMapping:
    """Orthogonal transforms into the shared space, plus re-weighting."""

    source_transform: np.ndarray
    target_transform: np.ndarray
    reweight: np.ndarray = None
    objective: float = 0.0
    objective_history: list = field(default_factory=list, repr=False)

    def project(self, vectors: np.ndarray, side: str, reweighted: bool = True):
        w = self.source_transform if side == "src" else self.target_transform
        out = vectors @ w
        if reweighted and self.reweight is not None:
            out = out * self.reweight
        return out


def orthogonal_procrustes(a: np.ndarray, b: np.ndarray):
    """(U, V, s) maximizing trace alignment of a@U with b@V."""
    u, s, vt = np.linalg.svd(a.T @ b)
    return u, vt.T, s


def _identical_seed(ngrams_a, ngrams_b):
    index_b = {ng: j for j, ng in enumerate(ngrams_b)}
    pairs = [(i, index_b[ng]) for i, ng in enumerate(ngrams_a) if ng in index_b]
    return pairs


def _similarity_distribution_seed(x, z, sample: int = 2000):
    """Fully unsupervised seed: match rows by sorted intra-space similarity."""
    xs = x[:sample]
    zs = z[:sample]
    mx = np.sort(xs @ xs.T, axis=1)[:, ::-1]
    mz = np.sort(zs @ zs.T, axis=1)[:, ::-1]
    width = min(mx.shape[1], mz.shape[1])
    mx = unit_rows(mx[:, :width])
    mz = unit_rows(mz[:, :width])
    best = (mx @ mz.T).argmax(axis=1)
    return [(i, int(j)) for i, j in enumerate(best)]


def _induce_dictionary(xw, zw, keep_prob, rng, penalty_k=10):
    """Union of forward and backward CSLS argmax matches, with dropout."""
    fwd = csls_matrix(xw, zw, penalty_k)
    pairs = {(i, int(j)) for i, j in enumerate(fwd.argmax(axis=1))}
    bwd = csls_matrix(zw, xw, penalty_k)
    pairs |= {(int(i), j) for j, i in enumerate(bwd.argmax(axis=1))}
    pairs = sorted(pairs)
    if keep_prob < 1.0:
        mask = rng.rand(len(pairs)) < keep_prob
        kept = [p for p, m in zip(pairs, mask) if m]
        if kept:
            pairs = kept
    return pairs


def map_embeddings(
    emb_src: EmbeddingMatrix,
    emb_tgt: EmbeddingMatrix,
    init: str = "identical_tokens",
    improvement_threshold: float = 1e-6,
    patience: int = 50,
    max_iterations: int = 1000,
    initial_keep_prob: float = 0.1,
    penalty_k: int = 10,
    seed: int = 0,
) -> CrossMapping:
    """Self-learning orthogonal mapping between two normalized spaces.

    Alternates Procrustes on the current dictionary with CSLS dictionary
    re-induction; stochastic dropout keeps early dictionaries exploratory
    and anneals toward keeping every pair.  Stops at a dictionary fixed
    point or after ``patience`` stalled iterations without dropout.
    """
    x = emb_src.vectors
    z = emb_tgt.vectors
    if init == "identical_tokens":
        pairs = _identical_seed(emb_src.ngrams, emb_tgt.ngrams)
        if not pairs:
            raise ValueError("no identical n-grams to seed the mapping")
    elif init == "fully_unsupervised":
        pairs = _similarity_distribution_seed(x, z)
    else:
        raise ValueError(f"unknown init {init!r}")

    rng = np.random.RandomState(seed)
    keep_prob = initial_keep_prob
    best_objective = -np.inf
    best = None
    history = []
    stall = 0
    converged = False
    for _ in range(max_iterations):
        di = np.array([i for i, _ in pairs])
        dj = np.array([j for _, j in pairs])
        u, v, s = orthogonal_procrustes(x[di], z[dj])
        xw = x @ u
        zw = z @ v
        new_pairs = _induce_dictionary(xw, zw, keep_prob, rng, penalty_k)
        ndi = np.array([i for i, _ in new_pairs])
        ndj = np.array([j for _, j in new_pairs])
        objective = float((xw[ndi] * zw[ndj]).sum(axis=1).mean())
        history.append(objective)
        if objective > best_objective + improvement_threshold:
            best_objective = objective
            best = (u, v, s, pairs)
            stall = 0
        elif keep_prob < 1.0:
            keep_prob = min(1.0, keep_prob * 2.0)
        else:
            stall += 1
            if stall >= patience:
                converged = True
                break
        if keep_prob >= 1.0 and new_pairs == pairs:
            converged = True
            if objective >= best_objective:
                best = (u, v, s, pairs)
            break
        pairs = new_pairs
    if not converged:
        warnings.warn("mapping did not converge; returning best state so far")
    u, v, s, final_pairs = best if best is not None else (u, v, s, pairs)
    return CrossMapping(
        source_transform=u,
        target_transform=v,
        reweight=np.sqrt(np.maximum(s, 0.0) / max(len(final_pairs), 1)),
        objective=best_objective,
        objective_history=history,
    )


def write_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Text format: "count dim" header, n-gram tokens joined by "_"
    (literal underscores escaped as "\\u"), then the vector values."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(emb.ngrams)} {emb.dim}\n")
        for ngram, row in zip(emb.ngrams, emb.vectors):
            name = "_".join(t.replace("_", "\\u") for t in ngram)
            fh.write(name + " " + " ".join(repr(float(v)) for v in row) + "\n")


def read_embeddings(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError(path, 1, "expected 'count dim' header")
        count, dim = int(header[0]), int(header[1])
        ngrams = []
        rows = np.empty((count, dim))
        for i in range(count):
            parts = fh.readline().rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ParseError(path, i + 2, f"expected {dim + 1} fields")
            ngrams.append(tuple(t.replace("\\u", "_") for t in parts[0].split("_")))
            rows[i] = [float(v) for v in parts[1:]]
    return EmbeddingMatrix(ngrams=ngrams, vectors=rows)
