"""Lexical (emission) probabilities with Laplace smoothing.

The model counts weighted (form, tag) occurrences plus two backoff
tables: per ambiguity class and per tag (unigram).  Lookup order is
strict: word counts when the form was seen at all, else the class
distribution when the token's ambiguity class was seen, else unigrams.
At every level the distribution is Laplace-corrected over the token's
candidate set only, so every candidate keeps strictly positive
probability and no mass leaks to impossible tags.
"""

from __future__ import annotations

from typing import Iterable

from .corpus import Token, class_key
from .errors import ModelError, ParseError, TrainingError


class LexicalModel:
    def __init__(self, tagset_size: int = 0):
        self.word_tag_counts = {}   # (form, tag) -> weighted count
        self.word_totals = {}       # form -> weighted count
        self.class_tag_counts = {}  # (class key, tag) -> weighted count
        self.class_totals = {}      # class key -> weighted count
        self.unigram_counts = {}    # tag -> weighted count
        self.tagset_size = tagset_size
        self.observations = 0       # raw (unweighted) training tokens
        self._emission_cache = {}   # (form, candidates) -> distribution

    @property
    def trained(self) -> bool:
        return sum(self.unigram_counts.values()) > 0

    @property
    def count_scale(self) -> float:
        """Mean weight per training token.

        Smoothing divides counts by this, so rescaling every segment
        weight by a common factor leaves all emission probabilities
        unchanged; with unit weights it is exactly add-one smoothing.
        """
        if self.observations <= 0:
            return 1.0
        return sum(self.unigram_counts.values()) / self.observations

    def add(self, form: str, candidates: Iterable[str], gold: str, weight: float):
        if self._emission_cache:
            self._emission_cache = {}
        self.observations += 1
        key = (form, gold)
        self.word_tag_counts[key] = self.word_tag_counts.get(key, 0.0) + weight
        self.word_totals[form] = self.word_totals.get(form, 0.0) + weight
        ckey = (class_key(candidates), gold)
        self.class_tag_counts[ckey] = self.class_tag_counts.get(ckey, 0.0) + weight
        self.class_totals[ckey[0]] = self.class_totals.get(ckey[0], 0.0) + weight
        self.unigram_counts[gold] = self.unigram_counts.get(gold, 0.0) + weight


def train_lexicon(weighted_corpus, allow_masked: bool = False) -> LexicalModel:
    """Accumulate weighted counts from every segment of a WeightedCorpus.

    Tokens without a gold tag raise TrainingError unless
    ``allow_masked`` is set, in which case they are skipped (the
    agreement-corpus masking convention).
    """
    segments = list(weighted_corpus)
    model = None
    for seg_idx, (corpus, weight) in enumerate(segments):
        if weight <= 0:
            raise TrainingError("segment %d has non-positive weight %r" % (seg_idx, weight))
        if model is None:
            model = LexicalModel(len(corpus.tagset))
        for s_idx, sentence in enumerate(corpus.sentences):
            for t_idx, tok in enumerate(sentence):
                if tok.gold is None:
                    if allow_masked:
                        continue
                    raise TrainingError(
                        "token without gold tag (segment %d, sentence %d, token %d: %r)"
                        % (seg_idx, s_idx, t_idx, tok.form)
                    )
                model.add(tok.form, tok.candidates, tok.gold, weight)
    if model is None:
        raise TrainingError("no segments to train on")
    return model


def emission_prob(model: LexicalModel, token: Token) -> dict:
    """P(tag | token) over the token's candidates, summing to 1.

    Backoff: seen form -> seen ambiguity class -> unigrams, with
    add-one smoothing over the candidate set at each level.
    """
    candidates = token.candidates
    cached = model._emission_cache.get((token.form, candidates))
    if cached is not None:
        return cached
    if not model.trained:
        raise ModelError("lexical model is untrained")
    if not candidates:
        raise ModelError("token %r has no candidates" % (token.form,))
    if token.form in model.word_totals:
        counts = {t: model.word_tag_counts.get((token.form, t), 0.0) for t in candidates}
    else:
        ckey = class_key(candidates)
        if ckey in model.class_totals:
            counts = {t: model.class_tag_counts.get((ckey, t), 0.0) for t in candidates}
        else:
            counts = {t: model.unigram_counts.get(t, 0.0) for t in candidates}
    scale = model.count_scale
    total = sum(counts.values()) / scale + len(candidates)
    dist = {t: (c / scale + 1.0) / total for t, c in counts.items()}
    model._emission_cache[(token.form, candidates)] = dist
    return dist


def write_lexicon(model: LexicalModel) -> str:
    """Line format: W/C/U records with counts at full precision."""
    lines = ["L\t%d\t%d" % (model.tagset_size, model.observations)]
    for (form, tag), count in sorted(model.word_tag_counts.items()):
        lines.append("W\t%s\t%s\t%r" % (form, tag, count))
    for (ckey, tag), count in sorted(model.class_tag_counts.items()):
        lines.append("C\t%s\t%s\t%r" % (ckey, tag, count))
    for tag, count in sorted(model.unigram_counts.items()):
        lines.append("U\t%s\t%r" % (tag, count))
    return "\n".join(lines) + "\n"


def read_lexicon(text: str) -> LexicalModel:
    model = LexicalModel()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        kind = cols[0]
        try:
            if kind == "L":
                model.tagset_size = int(cols[1])
                if len(cols) > 2:
                    model.observations = int(cols[2])
            elif kind == "W":
                form, tag, count = cols[1], cols[2], float(cols[3])
                model.word_tag_counts[(form, tag)] = count
                model.word_totals[form] = model.word_totals.get(form, 0.0) + count
            elif kind == "C":
                ckey, tag, count = cols[1], cols[2], float(cols[3])
                model.class_tag_counts[(ckey, tag)] = count
                model.class_totals[ckey] = model.class_totals.get(ckey, 0.0) + count
            elif kind == "U":
                model.unigram_counts[cols[1]] = float(cols[2])
            else:
                raise ParseError("unknown record kind %r" % kind, line=lineno)
        except (IndexError, ValueError) as exc:
            raise ParseError("bad lexicon record: %s" % exc, line=lineno)
    return model
