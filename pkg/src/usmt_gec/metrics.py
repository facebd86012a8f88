"""GEC evaluation: max-match edit extraction, M2 scoring, and GLEU.

The max-match extractor searches all monotone edit decompositions of a
(source, hypothesis) pair, block sizes capped per side, and returns the
decomposition with the largest gold overlap (ties: fewer edits, then a
deterministic leftmost preference).  Corpus scores accumulate TP/FP/FN and
derive precision, recall, and F-beta from the totals.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from .corpus import Sentence
from .errors import ParseError

NOOP_TYPE = "noop"


@dataclass(frozen=True)
class EditAnnotation:
    """Span edit: replace source[start:end] by the replacement tokens."""

    start: int
    end: int
    replacement: tuple
    type: str = "UNK"
    annotator: int = 0

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"bad edit span ({self.start}, {self.end})")
        if self.start == self.end and not self.replacement:
            raise ValueError("noop edit (empty span, empty replacement)")

    @property
    def key(self):
        return (self.start, self.end, tuple(self.replacement))


@dataclass
class MetricReport:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    per_type: dict = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0

    @property
    def f05(self) -> float:
        return f_beta(self.precision, self.recall, 0.5)


def f_beta(precision: float, recall: float, beta: float = 0.5) -> float:
    den = beta * beta * precision + recall
    if den == 0:
        return 0.0
    return (1 + beta * beta) * precision * recall / den


def extract_system_edits(
    source: Sentence,
    hypothesis: Sentence,
    gold,
    max_merge_span: int = 2,
) -> list:
    """Max-match extraction of the system's edits against a gold edit set.

    Searches every monotone decomposition whose edit blocks span at most
    ``max_merge_span`` tokens per side and maximizes |edits ∩ gold|.
    """
    src = tuple(source)
    hyp = tuple(hypothesis)
    gold_keys = {g.key for g in gold}
    n, m = len(src), len(hyp)
    cap = max_merge_span

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == n and j == m:
            return (0, 0, ())
        cands = []
        if i < n and j < m and src[i] == hyp[j]:
            g, ne, ed = best(i + 1, j + 1)
            cands.append((g, ne, ed))
        for a in range(0, min(cap, n - i) + 1):
            for b in range(0, min(cap, m - j) + 1):
                if a == 0 and b == 0:
                    continue
                repl = hyp[j : j + b]
                if src[i : i + a] == repl:
                    continue
                edit = (i, i + a, repl)
                if edit not in gold_keys and a >= 1 and b >= 1:
                    # A block may swallow matching boundary tokens only in
                    # service of a gold match; otherwise edits stay minimal.
                    if src[i] == hyp[j] or src[i + a - 1] == hyp[j + b - 1]:
                        continue
                tail = best(i + a, j + b)
                gain = 1 if edit in gold_keys else 0
                cands.append((gain + tail[0], tail[1] + 1, (edit,) + tail[2]))
        return min(cands, key=lambda t: (-t[0], t[1], t[2]))

    try:
        edits = best(0, 0)[2]
    finally:
        best.cache_clear()
    return [
        EditAnnotation(start=s, end=e, replacement=r) for s, e, r in edits
    ]


def _sentence_counts(system_edits, gold_edits):
    sys_keys = {e.key for e in system_edits}
    gold_keys = {g.key for g in gold_edits}
    tp = len(sys_keys & gold_keys)
    return tp, len(sys_keys) - tp, len(gold_keys) - tp


def m2_score(triples, max_merge_span: int = 2, beta: float = 0.5) -> MetricReport:
    """Corpus M2 score over (source, hypothesis, {annotator: edits}) triples.

    Per sentence the annotator maximizing the F-score of the cumulative
    counts is chosen, mirroring the reference scorer's multi-annotator rule;
    ties keep the lowest annotator id.
    """
    cum_tp = cum_fp = cum_fn = 0
    for source, hypothesis, annotations in triples:
        if not annotations:
            annotations = {0: []}
        best = None
        for annotator in sorted(annotations):
            gold = annotations[annotator]
            system = extract_system_edits(
                source, hypothesis, gold, max_merge_span=max_merge_span
            )
            tp, fp, fn = _sentence_counts(system, gold)
            report = MetricReport(cum_tp + tp, cum_fp + fp, cum_fn + fn)
            score = f_beta(report.precision, report.recall, beta)
            if best is None or score > best[0]:
                best = (score, tp, fp, fn)
        cum_tp += best[1]
        cum_fp += best[2]
        cum_fn += best[3]
    return MetricReport(cum_tp, cum_fp, cum_fn)


def _ngram_counts(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _gleu_sentence_stats(source, hypothesis, reference, max_n):
    """Per-order (numerator, denominator) pairs plus the two lengths."""
    stats = []
    for n in range(1, max_n + 1):
        hyp_ngrams = _ngram_counts(hypothesis, n)
        ref_ngrams = _ngram_counts(reference, n)
        src_ngrams = _ngram_counts(source, n)
        diff = src_ngrams - ref_ngrams
        matches = sum((hyp_ngrams & ref_ngrams).values())
        penalty = sum((hyp_ngrams & diff).values())
        numerator = max(0, matches - penalty)
        denominator = max(0, len(hypothesis) + 1 - n)
        stats.append((numerator, denominator))
    return stats, len(hypothesis), len(reference)


def gleu(
    triples,
    max_n: int = 4,
    n_iterations: int = 500,
    seed: int = 0,
) -> float:
    """Sampled-reference GLEU over (source, hypothesis, references) triples.

    Each iteration draws one reference per sentence; the reported score is
    the mean of the per-iteration corpus scores.  Draws are stratified (a
    fresh random permutation of the references per round) so every reference
    is used a near-equal number of times and the mean is stable under
    reference reordering.  Any zero corpus-level numerator or denominator
    makes that iteration score 0.
    """
    triples = list(triples)
    if not triples:
        raise ValueError("empty corpus")
    cache = []
    for source, hypothesis, references in triples:
        if not references:
            raise ValueError("every sentence needs at least one reference")
        cache.append(
            [
                _gleu_sentence_stats(source, hypothesis, ref, max_n)
                for ref in references
            ]
        )
    rng = random.Random(seed)
    draws = []
    for per_ref in cache:
        order = []
        while len(order) < n_iterations:
            block = list(range(len(per_ref)))
            rng.shuffle(block)
            order.extend(block)
        draws.append(order)
    total = 0.0
    for it in range(n_iterations):
        nums = [0] * max_n
        dens = [0] * max_n
        hyp_len = 0
        ref_len = 0
        for per_ref, order in zip(cache, draws):
            stats, hlen, rlen = per_ref[order[it]]
            for k, (num, den) in enumerate(stats):
                nums[k] += num
                dens[k] += den
            hyp_len += hlen
            ref_len += rlen
        if hyp_len == 0 or any(n == 0 for n in nums) or any(d == 0 for d in dens):
            continue
        log_prec = sum(math.log(n / d) for n, d in zip(nums, dens)) / max_n
        bp = min(0.0, 1.0 - ref_len / hyp_len)
        total += math.exp(bp + log_prec)
    return total / n_iterations


def _spans_overlap(a: EditAnnotation, b: EditAnnotation) -> bool:
    return max(a.start, b.start) <= min(a.end, b.end)


def per_type_report(system_edits, gold_edits, types=None) -> dict:
    """Per-type TP/FP/FN over parallel per-sentence edit lists.

    FP edits inherit the type of the nearest overlapping gold edit, falling
    back to "OTHER"; FN counts come from unmatched gold edits.
    """
    counts = {}

    def bucket(type_name):
        return counts.setdefault(type_name, MetricReport())

    for system, gold in zip(system_edits, gold_edits):
        gold_by_key = {g.key: g for g in gold}
        matched_keys = set()
        for edit in system:
            if edit.key in gold_by_key:
                bucket(gold_by_key[edit.key].type).tp += 1
                matched_keys.add(edit.key)
            else:
                overlapping = [g for g in gold if _spans_overlap(edit, g)]
                if overlapping:
                    nearest = min(
                        overlapping,
                        key=lambda g: (
                            abs((g.start + g.end) - (edit.start + edit.end)),
                            g.start,
                            g.end,
                        ),
                    )
                    bucket(nearest.type).fp += 1
                else:
                    bucket("OTHER").fp += 1
        for g in gold:
            if g.key not in matched_keys:
                bucket(g.type).fn += 1
    if types is not None:
        counts = {t: counts.get(t, MetricReport()) for t in types}
    return counts


def read_m2(path):
    """Parse an M2 annotation file into (source, {annotator: edits}) pairs."""
    entries = []
    source = None
    annotations = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip()
        if not line:
            if source is not None:
                entries.append((source, annotations))
                source, annotations = None, {}
            continue
        if line.startswith("S "):
            source = line[2:].split()
            annotations = {}
        elif line.startswith("A "):
            if source is None:
                raise ParseError(path, lineno, "edit before any source line")
            fields = line[2:].split("|||")
            if len(fields) != 6:
                raise ParseError(path, lineno, f"expected 6 fields, got {len(fields)}")
            span, etype, replacement = fields[0], fields[1], fields[2]
            annotator = int(fields[5])
            try:
                start_s, end_s = span.split()
                start, end = int(start_s), int(end_s)
            except ValueError:
                raise ParseError(path, lineno, f"bad span {span!r}") from None
            annotations.setdefault(annotator, [])
            if etype == NOOP_TYPE:
                continue
            repl = () if replacement == "-NONE-" else tuple(replacement.split())
            annotations[annotator].append(
                EditAnnotation(start, end, repl, etype, annotator)
            )
        else:
            raise ParseError(path, lineno, f"unrecognized line {line!r}")
    if source is not None:
        entries.append((source, annotations))
    return entries


def write_m2(entries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for source, annotations in entries:
            fh.write("S " + " ".join(source) + "\n")
            if not annotations:
                annotations = {0: []}
            for annotator in sorted(annotations):
                edits = annotations[annotator]
                if not edits:
                    fh.write(
                        f"A -1 -1|||{NOOP_TYPE}|||-NONE-|||REQUIRED|||-NONE-|||{annotator}\n"
                    )
                for e in edits:
                    repl = " ".join(e.replacement) if e.replacement else "-NONE-"
                    fh.write(
                        f"A {e.start} {e.end}|||{e.type}|||{repl}|||REQUIRED|||-NONE-|||{annotator}\n"
                    )
            fh.write("\n")


def apply_edits(source: Sentence, edits) -> Sentence:
    """Apply span edits to a sentence (edits must not overlap)."""
    out = []
    pos = 0
    for e in sorted(edits, key=lambda e: (e.start, e.end)):
        if e.start < pos:
            raise ValueError("overlapping edits")
        out.extend(source[pos : e.start])
        out.extend(e.replacement)
        pos = e.end
    out.extend(source[pos:])
    return out
