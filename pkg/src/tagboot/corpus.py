"""Corpus data model and file IO.

A corpus is a sequence of sentences of analyzed tokens.  Every token
carries its word form and a non-empty candidate tag set (the ambiguity
class produced by a morphological analyzer or a candidate dictionary);
hand-tagged corpora additionally carry a gold tag per token.

The on-disk representation is the vertical format: one token per line,

    form<TAB>cand1 cand2 ...<TAB>gold

with the gold column optional, a blank line closing each sentence and
``#`` in column 0 starting a comment line.  Tagger output adds a fourth
column holding the assigned tag, so any Corpus value round-trips.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Optional

from .errors import IntegrityError, ParseError, TrainingError

# Reserved codes that can never appear in a user tagset: sentence
# boundary pseudo-tags and the out-of-sentence marker used in context
# features.  "|" is reserved as the ambiguity-class separator.
BOS = "<s>"
EOS = "</s>"
BOUNDARY = "##"
RESERVED_CODES = (BOS, EOS, BOUNDARY)


def class_key(candidates: Iterable[str]) -> str:
    """Canonical identifier of an ambiguity class (order independent)."""
    return "|".join(sorted(set(candidates)))


class TagSet:
    """Closed tag inventory with an optional full-tag -> reduced-tag map.

    Tag codes are plain strings; the tagset owns ordering (used for
    deterministic tie-breaking) and the reduction mapping (by default
    the category+subcategory prefix, i.e. the first two characters).
    """

    def __init__(self, codes: Iterable[str], reduction: Optional[dict] = None):
        self.codes = tuple(codes)
        if not self.codes:
            raise IntegrityError("empty tagset")
        self.index = {}
        for code in self.codes:
            if not code or any(ch.isspace() for ch in code):
                raise IntegrityError("bad tag code %r" % (code,))
            if code in RESERVED_CODES or "|" in code:
                raise IntegrityError("reserved tag code %r" % (code,))
            if code in self.index:
                raise IntegrityError("duplicate tag code %r" % (code,))
            self.index[code] = len(self.index)
        if reduction is None:
            reduction = {code: code[:2] for code in self.codes}
        missing = [c for c in self.codes if c not in reduction]
        if missing:
            raise IntegrityError("reduction not total, missing %s" % missing[:5])
        self.reduction = {c: reduction[c] for c in self.codes}

    def __contains__(self, code) -> bool:
        return code in self.index

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[str]:
        return iter(self.codes)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TagSet)
            and self.codes == other.codes
            and self.reduction == other.reduction
        )

    def __repr__(self):
        return "TagSet(%d tags)" % len(self.codes)

    def sort_key(self, code: str) -> int:
        return self.index[code]

    def order(self, candidates: Iterable[str]) -> tuple:
        """Candidates in tagset order (the canonical Token ordering)."""
        return tuple(sorted(set(candidates), key=self.index.__getitem__))

    def reduced(self, code: str) -> str:
        return self.reduction[code]

    def reduced_tagset(self) -> "TagSet":
        seen = []
        for code in self.codes:
            r = self.reduction[code]
            if r not in seen:
                seen.append(r)
        # reduction of a reduced tagset is the identity, so reduce_tags
        # is idempotent
        return TagSet(seen, reduction={r: r for r in seen})


@dataclass
class Token:
    """One analyzed token.

    ``candidates`` is never empty and is kept in tagset order.  ``gold``
    is the hand-assigned (or agreement-promoted) tag; a training token
    without gold is treated as masked.  ``assigned`` holds one tagger's
    output when a tagging is materialized as a corpus.
    """

    form: str
    candidates: tuple
    gold: Optional[str] = None
    assigned: Optional[str] = None

    @property
    def is_ambiguous(self) -> bool:
        return len(self.candidates) > 1

    @property
    def class_key(self) -> str:
        return class_key(self.candidates)


@dataclass
class Sentence:
    tokens: list

    def __post_init__(self):
        if not self.tokens:
            raise IntegrityError("empty sentence")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]


@dataclass
class Corpus:
    sentences: list
    tagset: TagSet

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    @property
    def n_gold_tokens(self) -> int:
        """Trainable (unmasked) token count."""
        return sum(1 for t in self.tokens() if t.gold is not None)

    def tokens(self) -> Iterator[Token]:
        for sentence in self.sentences:
            yield from sentence

    def strip_gold(self) -> "Corpus":
        """Copy with gold and assigned tags dropped (a raw analyzed corpus)."""
        out = []
        for sentence in self.sentences:
            out.append(Sentence([replace(t, gold=None, assigned=None) for t in sentence]))
        return Corpus(out, self.tagset)


@dataclass
class StatsReport:
    word_count: int
    ambiguous_fraction: float
    mean_tags_ambiguous: float
    mean_tags_overall: float
    no_ambiguous_tokens: bool = False


def _check_tag(code, tagset, lineno):
    if code not in tagset:
        raise ParseError("unknown tag code %r" % (code,), line=lineno)
    return code


def parse_vertical(text: str, tagset: TagSet, cand_dict: Optional[dict] = None) -> Corpus:
    """Parse vertical-format text into a Corpus.

    Lines with only a form column get their candidates from
    ``cand_dict`` when the form has an entry, otherwise the full
    tagset (the unknown-word fallback).
    """
    sentences = []
    tokens = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        if raw.startswith("#"):
            continue
        line = raw.rstrip("\r")
        if not line.strip():
            if tokens:
                sentences.append(Sentence(tokens))
                tokens = []
            continue
        cols = line.split("\t")
        form = cols[0]
        if not form:
            raise ParseError("empty form column", line=lineno)
        if len(cols) >= 2 and cols[1].strip():
            cands = [_check_tag(c, tagset, lineno) for c in cols[1].split()]
            candidates = tagset.order(cands)
        elif cand_dict and form in cand_dict:
            candidates = tagset.order(
                _check_tag(c, tagset, lineno) for c in cand_dict[form]
            )
        else:
            candidates = tuple(tagset.codes)
        gold = None
        if len(cols) >= 3 and cols[2]:
            gold = _check_tag(cols[2], tagset, lineno)
            if gold not in candidates:
                raise IntegrityError(
                    "line %d: gold tag %r not among candidates %s"
                    % (lineno, gold, list(candidates))
                )
        assigned = None
        if len(cols) >= 4 and cols[3]:
            assigned = _check_tag(cols[3], tagset, lineno)
            if assigned not in candidates:
                raise IntegrityError(
                    "line %d: assigned tag %r not among candidates %s"
                    % (lineno, assigned, list(candidates))
                )
        if len(cols) > 4:
            raise ParseError("too many columns (%d)" % len(cols), line=lineno)
        tokens.append(Token(form, candidates, gold, assigned))
    if tokens:
        sentences.append(Sentence(tokens))
    return Corpus(sentences, tagset)


def write_vertical(corpus: Corpus) -> str:
    lines = []
    for sentence in corpus.sentences:
        for tok in sentence:
            cols = [tok.form, " ".join(tok.candidates)]
            if tok.assigned is not None:
                cols.append(tok.gold or "")
                cols.append(tok.assigned)
            elif tok.gold is not None:
                cols.append(tok.gold)
            lines.append("\t".join(cols))
        lines.append("")
    return "\n".join(lines)


def load_tagset(text: str) -> TagSet:
    """Tagset file: one code per line, optional second column = reduced code."""
    codes = []
    reduction = {}
    explicit = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split()
        codes.append(cols[0])
        if len(cols) >= 2:
            reduction[cols[0]] = cols[1]
            explicit = True
    if explicit:
        for code in codes:
            reduction.setdefault(code, code[:2])
        return TagSet(codes, reduction)
    return TagSet(codes)


def write_tagset(tagset: TagSet) -> str:
    lines = []
    for code in tagset.codes:
        reduced = tagset.reduction[code]
        if reduced != code[:2]:
            lines.append("%s\t%s" % (code, reduced))
        else:
            lines.append(code)
    return "\n".join(lines) + "\n"


def load_candidate_dict(text: str) -> dict:
    """Candidate dictionary file: form<TAB>cand1 cand2 ..."""
    table = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 2 or not cols[1].split():
            raise ParseError("expected form<TAB>candidates", line=lineno)
        table[cols[0]] = tuple(cols[1].split())
    return table


def corpus_stats(corpus: Corpus) -> StatsReport:
    n = corpus.n_tokens
    if n == 0:
        raise TrainingError("cannot compute statistics of an empty corpus")
    ambiguous = [t for t in corpus.tokens() if t.is_ambiguous]
    total_tags = sum(len(t.candidates) for t in corpus.tokens())
    if ambiguous:
        mean_amb = sum(len(t.candidates) for t in ambiguous) / len(ambiguous)
    else:
        mean_amb = 0.0
    return StatsReport(
        word_count=n,
        ambiguous_fraction=len(ambiguous) / n,
        mean_tags_ambiguous=mean_amb,
        mean_tags_overall=total_tags / n,
        no_ambiguous_tokens=not ambiguous,
    )


def split_corpus(corpus: Corpus, seed_fraction: float, rng_seed: int):
    """Deterministic sentence-level split into (train, test)."""
    if not 0.0 < seed_fraction < 1.0:
        raise IntegrityError("seed_fraction must be in (0, 1)")
    n = corpus.n_sentences
    if n < 2:
        raise TrainingError("need at least 2 sentences to split")
    order = list(range(n))
    random.Random(rng_seed).shuffle(order)
    k = int(round(seed_fraction * n))
    k = min(max(k, 1), n - 1)
    train_idx = sorted(order[:k])
    test_idx = sorted(order[k:])
    train = Corpus([corpus.sentences[i] for i in train_idx], corpus.tagset)
    test = Corpus([corpus.sentences[i] for i in test_idx], corpus.tagset)
    return train, test


def reduce_tags(corpus: Corpus) -> Corpus:
    """Map every tag to its reduced form, merging collapsed candidates."""
    tagset = corpus.tagset
    reduced_set = tagset.reduced_tagset()
    sentences = []
    for sentence in corpus.sentences:
        toks = []
        for tok in sentence:
            cands = reduced_set.order(tagset.reduced(c) for c in tok.candidates)
            gold = tagset.reduced(tok.gold) if tok.gold is not None else None
            assigned = tagset.reduced(tok.assigned) if tok.assigned is not None else None
            toks.append(Token(tok.form, cands, gold, assigned))
        sentences.append(Sentence(toks))
    return Corpus(sentences, reduced_set)
