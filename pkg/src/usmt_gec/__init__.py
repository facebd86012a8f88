"""Unsupervised phrase-based SMT toolkit for grammatical error correction.

Builds a GEC system from two unaligned monolingual corpora (a learner-like
noisy side and a clean side): n-gram embeddings mapped into a shared space,
a phrase table induced from embedding similarities, iterative refinement
with synthetic parallel data, MERT tuning against GEC metrics, and
evaluation with the max-match scorer and GLEU.
"""

__version__ = "0.1.0"
