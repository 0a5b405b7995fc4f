"""Tag-transition models (bigram/trigram) and candidate-constrained
Viterbi decoding.

Sentences are padded with order-1 boundary symbols at the start and one
at the end.  Transition probabilities are Laplace-smoothed over the full
tagset; a trigram model keeps an auxiliary bigram table and interpolates
towards it when the trigram context was never seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import BOS, EOS, Corpus, Sentence
from .errors import ModelError, ParseError, TrainingError
from .lexicon import LexicalModel, emission_prob

# Interpolation (bigram share, smoothed-trigram share) applied when a
# trigram context is unseen.
DEFAULT_BACKOFF = (0.7, 0.3)


@dataclass
class Tagging:
    """One tagger's output for one sentence: a tag and a per-token
    log-probability score."""

    tags: tuple
    scores: tuple

    def __post_init__(self):
        if len(self.tags) != len(self.scores):
            raise ModelError("tags and scores length mismatch")

    def __len__(self):
        return len(self.tags)

    @property
    def total_score(self) -> float:
        return sum(self.scores)


class NgramModel:
    def __init__(self, order: int, tagset_size: int, backoff=DEFAULT_BACKOFF):
        if order not in (2, 3):
            raise ModelError("order must be 2 or 3, got %r" % (order,))
        self.order = order
        self.tagset_size = tagset_size
        self.context_counts = {}     # context tuple -> weighted count
        self.transition_counts = {}  # (context tuple, tag) -> weighted count
        self.total_weight = 0.0
        self.observations = 0        # raw (unweighted) transition events
        self.backoff = backoff
        # trained alongside when order == 3, used for backoff
        self.bigram = None if order == 2 else NgramModel(2, tagset_size)

    def add(self, context: tuple, tag: str, weight: float):
        self.context_counts[context] = self.context_counts.get(context, 0.0) + weight
        key = (context, tag)
        self.transition_counts[key] = self.transition_counts.get(key, 0.0) + weight
        self.total_weight += weight
        self.observations += 1
        if self.bigram is not None:
            self.bigram.add(context[-1:], tag, weight)

    @property
    def count_scale(self) -> float:
        """Mean weight per transition; dividing by it keeps smoothing,
        and hence decoding, invariant under a common count rescaling."""
        if self.observations <= 0:
            return 1.0
        return self.total_weight / self.observations

    def transition_prob(self, context: tuple, tag: str) -> float:
        """Laplace-smoothed P(tag | context) with trigram->bigram backoff."""
        v = self.tagset_size
        scale = self.count_scale
        ctx_count = self.context_counts.get(context, 0.0)
        p = ((self.transition_counts.get((context, tag), 0.0) / scale + 1.0)
             / (ctx_count / scale + v))
        if self.order == 3 and ctx_count == 0.0:
            w_bi, w_tri = self.backoff
            p_bi = self.bigram.transition_prob(context[-1:], tag)
            p = w_bi * p_bi + w_tri * p
        return p


def _sentence_tag_rows(corpus: Corpus, order: int):
    """Yield padded tag sequences; None marks a masked token."""
    pad = order - 1
    for sentence in corpus.sentences:
        tags = [tok.gold for tok in sentence]
        yield [BOS] * pad + tags + [EOS]


def train_ngrams(weighted_corpus, order: int, allow_masked: bool = False,
                 backoff=DEFAULT_BACKOFF) -> NgramModel:
    """Count weighted tag transitions over all segments.

    Any transition window overlapping a masked (gold-less) token is
    skipped when ``allow_masked`` is set, and raises otherwise.
    """
    segments = list(weighted_corpus)
    if not segments:
        raise TrainingError("no segments to train on")
    model = NgramModel(order, len(segments[0][0].tagset), backoff)
    for seg_idx, (corpus, weight) in enumerate(segments):
        if weight <= 0:
            raise TrainingError("segment %d has non-positive weight %r" % (seg_idx, weight))
        for row in _sentence_tag_rows(corpus, order):
            for i in range(order - 1, len(row)):
                window = row[i - order + 1: i + 1]
                if any(t is None for t in window):
                    if allow_masked:
                        continue
                    raise TrainingError(
                        "token without gold tag in segment %d" % seg_idx
                    )
                model.add(tuple(window[:-1]), window[-1], weight)
    return model


def viterbi_decode(sentence: Sentence, lexical_model: LexicalModel,
                   ngram_model: NgramModel) -> Tagging:
    """Best candidate-constrained tag sequence under transition and
    emission scores.

    Ties are broken towards the sequence whose earliest differing
    position carries the tag that comes first in the candidate order
    (tagset order); paths are compared explicitly on score ties, so
    decoding is fully deterministic.
    """
    if len(sentence) == 0:
        raise ModelError("cannot decode an empty sentence")
    order = ngram_model.order
    pad = order - 1
    emissions = [
        {t: math.log(p) for t, p in emission_prob(lexical_model, tok).items()}
        for tok in sentence
    ]
    # rank for lexicographic tie-breaking: position in the candidate
    # tuple, which parse keeps in tagset order
    ranks = [
        {t: r for r, t in enumerate(tok.candidates)} for tok in sentence
    ]

    def better(score_a, path_a, score_b, path_b):
        if score_a != score_b:
            return score_a > score_b
        for i, (x, y) in enumerate(zip(path_a, path_b)):
            if x != y:
                return ranks[i][x] < ranks[i][y]
        return False

    # state = tuple of the last (order-1) tags; value = (score, path, steps)
    start = tuple([BOS] * pad)
    states = {start: (0.0, ())}
    for i, tok in enumerate(sentence):
        nxt = {}
        for tag in tok.candidates:
            e = emissions[i][tag]
            for ctx, (score, path) in states.items():
                s = score + math.log(ngram_model.transition_prob(ctx, tag)) + e
                new_ctx = (ctx + (tag,))[-pad:] if pad else ()
                cand = (s, path + (tag,))
                old = nxt.get(new_ctx)
                if old is None or better(s, cand[1], old[0], old[1]):
                    nxt[new_ctx] = cand
        states = nxt
    best_score, best_path = None, None
    for ctx, (score, path) in states.items():
        s = score + math.log(ngram_model.transition_prob(ctx, EOS))
        if best_path is None or better(s, path, best_score, best_path):
            best_score, best_path = s, path
    # per-token log-prob contributions along the chosen path
    scores = []
    ctx = start
    for i, tag in enumerate(best_path):
        scores.append(math.log(ngram_model.transition_prob(ctx, tag)) + emissions[i][tag])
        ctx = (ctx + (tag,))[-pad:] if pad else ()
    scores[-1] += math.log(ngram_model.transition_prob(ctx, EOS))
    return Tagging(tags=best_path, scores=tuple(scores))


def write_ngrams(model: NgramModel) -> str:
    lines = ["O\t%d\t%d\t%r\t%r\t%d" % (model.order, model.tagset_size,
                                        model.backoff[0], model.backoff[1],
                                        model.observations)]

    def emit(m):
        for (ctx, tag), count in sorted(m.transition_counts.items()):
            lines.append("N%d\t%s\t%s\t%r" % (m.order, " ".join(ctx), tag, count))

    emit(model)
    if model.bigram is not None:
        emit(model.bigram)
    return "\n".join(lines) + "\n"


def read_ngrams(text: str) -> NgramModel:
    model = None
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        try:
            if cols[0] == "O":
                model = NgramModel(int(cols[1]), int(cols[2]),
                                   (float(cols[3]), float(cols[4])))
                if len(cols) > 5:
                    model.observations = int(cols[5])
                    if model.bigram is not None:
                        model.bigram.observations = model.observations
            elif cols[0] in ("N2", "N3"):
                if model is None:
                    raise ParseError("missing O header", line=lineno)
                target = model
                if cols[0] == "N2" and model.order == 3:
                    target = model.bigram
                ctx = tuple(cols[1].split(" "))
                count = float(cols[3])
                target.context_counts[ctx] = target.context_counts.get(ctx, 0.0) + count
                target.transition_counts[(ctx, cols[2])] = count
                target.total_weight += count
            else:
                raise ParseError("unknown record kind %r" % cols[0], line=lineno)
        except (IndexError, ValueError) as exc:
            raise ParseError("bad n-gram record: %s" % exc, line=lineno)
    if model is None:
        raise ParseError("empty n-gram model file")
    return model
