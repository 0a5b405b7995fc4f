"""Scoring, baseline tagging, agreement metrics and significance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

from .corpus import Corpus, Sentence
from .errors import AlignmentError, IntegrityError
from .lexicon import LexicalModel, emission_prob
from .ngrams import Tagging


@dataclass
class AccuracyReport:
    overall: float
    ambiguous_only: float
    total: int
    correct: int
    ambiguous_total: int
    ambiguous_correct: int


def check_alignment(corpus: Corpus, tagging: List[Tagging], what="tagging"):
    if len(tagging) != corpus.n_sentences:
        raise AlignmentError(
            "%s has %d sentences, corpus has %d"
            % (what, len(tagging), corpus.n_sentences)
        )
    for k, (sentence, t) in enumerate(zip(corpus.sentences, tagging)):
        if len(t) != len(sentence):
            raise AlignmentError(
                "%s sentence %d has %d tags for %d tokens"
                % (what, k, len(t), len(sentence))
            )


def evaluate(tagging: List[Tagging], gold_corpus: Corpus) -> AccuracyReport:
    """Overall and ambiguous-only accuracy against gold tags."""
    check_alignment(gold_corpus, tagging)
    total = correct = amb_total = amb_correct = 0
    for sentence, t in zip(gold_corpus.sentences, tagging):
        for tok, tag in zip(sentence, t.tags):
            if tok.gold is None:
                raise AlignmentError("gold corpus has an untagged token %r" % tok.form)
            total += 1
            hit = tag == tok.gold
            correct += hit
            if tok.is_ambiguous:
                amb_total += 1
                amb_correct += hit
    if total == 0:
        raise IntegrityError("cannot evaluate an empty corpus")
    return AccuracyReport(
        overall=correct / total,
        ambiguous_only=(amb_correct / amb_total) if amb_total else 1.0,
        total=total,
        correct=correct,
        ambiguous_total=amb_total,
        ambiguous_correct=amb_correct,
    )


def mft_tag(lexical_model: LexicalModel, sentence: Sentence) -> Tagging:
    """Most-frequent-tag baseline: context-free emission argmax."""
    tags = []
    scores = []
    for tok in sentence:
        dist = emission_prob(lexical_model, tok)
        best = tok.candidates[0]
        for t in tok.candidates[1:]:
            if dist[t] > dist[best]:
                best = t
        tags.append(best)
        scores.append(math.log(dist[best]))
    return Tagging(tags=tuple(tags), scores=tuple(scores))


def agreement_report(taggings: List[List[Tagging]], gold_corpus: Corpus):
    """Coverage of unanimous agreement and accuracy on the agreed part.

    Returns (coverage, agreement_accuracy); accuracy is None when no
    token is agreed on.
    """
    from .bootstrap import intersect_taggings  # local import, no cycle at module load

    result = intersect_taggings(gold_corpus, taggings)
    agreed = correct = 0
    for sentence, *per_tagger in zip(gold_corpus.sentences, *taggings):
        for idx, tok in enumerate(sentence):
            proposals = {t.tags[idx] for t in per_tagger}
            if len(proposals) == 1:
                agreed += 1
                if tok.gold is not None and proposals.pop() == tok.gold:
                    correct += 1
    accuracy = (correct / agreed) if agreed else None
    return result.coverage, accuracy


def correctness_vector(tagging: List[Tagging], gold_corpus: Corpus) -> List[bool]:
    check_alignment(gold_corpus, tagging)
    out = []
    for sentence, t in zip(gold_corpus.sentences, tagging):
        for tok, tag in zip(sentence, t.tags):
            out.append(tag == tok.gold)
    return out


def _chi2_sf_1df(x: float) -> float:
    """Survival function of chi-square with 1 degree of freedom."""
    return math.erfc(math.sqrt(x / 2.0))


def mcnemar_significance(correct_a, correct_b, alpha: float = 0.05):
    """McNemar's test with continuity correction on discordant pairs.

    ``correct_a``/``correct_b`` are aligned per-token correctness
    vectors.  Returns (statistic, p_value, significant).
    """
    if len(correct_a) != len(correct_b):
        raise AlignmentError(
            "correctness vectors differ in length: %d vs %d"
            % (len(correct_a), len(correct_b))
        )
    b = sum(1 for x, y in zip(correct_a, correct_b) if not x and y)
    c = sum(1 for x, y in zip(correct_a, correct_b) if x and not y)
    if b + c == 0:
        return 0.0, 1.0, False
    statistic = (abs(b - c) - 1.0) ** 2 / (b + c)
    p_value = _chi2_sf_1df(statistic)
    return statistic, p_value, p_value < alpha


def format_accuracy_table(rows, title="Tagger results") -> str:
    """Aligned text table: one row per (name, AccuracyReport)."""
    lines = [title, ""]
    name_w = max([len("Tagger Model")] + [len(n) for n, _ in rows])
    header = "%-*s  %9s  %9s" % (name_w, "Tagger Model", "Ambiguous", "Overall")
    lines.append(header)
    lines.append("-" * len(header))
    for name, report in rows:
        lines.append(
            "%-*s  %8.2f%%  %8.2f%%"
            % (name_w, name, 100 * report.ambiguous_only, 100 * report.overall)
        )
    return "\n".join(lines) + "\n"


def format_accuracy_tsv(rows) -> str:
    lines = ["tagger\tambiguous\toverall\tcorrect\ttotal"]
    for name, report in rows:
        lines.append(
            "%s\t%r\t%r\t%d\t%d"
            % (name, report.ambiguous_only, report.overall, report.correct, report.total)
        )
    return "\n".join(lines) + "\n"
