"""Relaxation labeling over weighted context constraints.

Constraints support or penalize a target tag in a context described by
pattern items at nonzero offsets; items test a neighbour's tag (matched
softly, by current probability mass), its ambiguity class, its word
form, or the sentence boundary.  Constraint bases are compiled from
bigram statistics (B), trigram statistics (T) and decision trees (C),
with mutual-information log-ratio weights, and can be dumped to or
loaded from a plain text file.

Each iteration computes, per token and candidate tag, the weighted
support of all matching constraints, squashes it into (-1, +1) and
rescales the candidate's probability by (1 + support) before
renormalizing.  Iteration stops on convergence or after a fixed number
of rounds; convergence is not guaranteed by the scheme, termination is.
"""

from __future__ import annotations

import math
import urllib.parse
from dataclasses import dataclass

from .corpus import BOS, BOUNDARY, EOS, Sentence
from .errors import IntegrityError, ModelError, ParseError
from .lexicon import LexicalModel, emission_prob
from .ngrams import NgramModel, Tagging
from .trees import OTHER, Leaf, TreeEnsemble

WEIGHT_CLIP = 10.0

KIND_TAG = "t"
KIND_CLASS = "c"
KIND_FORM = "w"
KIND_BOUNDARY = "b"


@dataclass(frozen=True)
class PatternItem:
    offset: int
    kind: str
    value: str = ""


@dataclass(frozen=True)
class Constraint:
    target: str
    pattern: tuple
    weight: float

    def __post_init__(self):
        if not self.pattern:
            raise IntegrityError("constraint with empty pattern")
        offsets = [item.offset for item in self.pattern]
        if 0 in offsets or len(set(offsets)) != len(offsets):
            raise IntegrityError(
                "pattern offsets must be distinct and nonzero: %s" % offsets
            )
        if not math.isfinite(self.weight):
            raise IntegrityError("constraint weight must be finite")


class ConstraintBase:
    def __init__(self, constraints=(), kinds=frozenset()):
        self.constraints = []
        self.by_target = {}
        self.kinds = frozenset(kinds)
        for c in constraints:
            self.add(c)

    def add(self, constraint: Constraint):
        self.constraints.append(constraint)
        self.by_target.setdefault(constraint.target, []).append(constraint)

    def __len__(self):
        return len(self.constraints)


@dataclass
class RelaxConfig:
    epsilon: float = 1e-3
    max_iters: int = 10


def _clip(w):
    return max(-WEIGHT_CLIP, min(WEIGHT_CLIP, w))


def _context_item(offset, symbol):
    if symbol in (BOS, EOS):
        return PatternItem(offset, KIND_BOUNDARY)
    return PatternItem(offset, KIND_TAG, symbol)


def _compile_bigrams(model: NgramModel):
    counts = model.transition_counts
    total = sum(counts.values())
    row = {}
    col = {}
    for ((a,), t), c in counts.items():
        row[a] = row.get(a, 0.0) + c
        col[t] = col.get(t, 0.0) + c
    out = []
    for ((a,), t), c in sorted(counts.items()):
        if c <= 0.0:
            continue
        weight = _clip(math.log(c * total / (row[a] * col[t])))
        if t not in (BOS, EOS):
            out.append(Constraint(t, (_context_item(-1, a),), weight))
        if a not in (BOS, EOS):
            out.append(Constraint(a, (_context_item(+1, t),), weight))
    return out


def _compile_trigrams(model: NgramModel):
    counts = model.transition_counts
    total = sum(counts.values())
    first, mid, last = {}, {}, {}
    pair_ab, pair_at, pair_bt = {}, {}, {}
    for ((a, b), t), c in counts.items():
        first[a] = first.get(a, 0.0) + c
        mid[b] = mid.get(b, 0.0) + c
        last[t] = last.get(t, 0.0) + c
        pair_ab[(a, b)] = pair_ab.get((a, b), 0.0) + c
        pair_at[(a, t)] = pair_at.get((a, t), 0.0) + c
        pair_bt[(b, t)] = pair_bt.get((b, t), 0.0) + c
    out = []
    for ((a, b), t), c in sorted(counts.items()):
        if c <= 0.0:
            continue
        if t not in (BOS, EOS):
            w = _clip(math.log(c * total / (last[t] * pair_ab[(a, b)])))
            out.append(Constraint(
                t, (_context_item(-2, a), _context_item(-1, b)), w))
        if b not in (BOS, EOS):
            w = _clip(math.log(c * total / (mid[b] * pair_at[(a, t)])))
            out.append(Constraint(
                b, (_context_item(-1, a), _context_item(+1, t)), w))
        if a not in (BOS, EOS):
            w = _clip(math.log(c * total / (first[a] * pair_bt[(b, t)])))
            out.append(Constraint(
                a, (_context_item(+1, b), _context_item(+2, t)), w))
    return out


def _tree_paths(node, path, sink):
    if isinstance(node, Leaf):
        sink.append((tuple(path), node))
        return
    for value, child in node.children.items():
        _tree_paths(child, path + [(node.feature, value)], sink)


def _compile_trees(ensemble: TreeEnsemble, lexicon: LexicalModel):
    """One constraint per (expressible root-to-leaf path, leaf tag)."""
    prior_total = sum(lexicon.unigram_counts.values())
    if prior_total <= 0:
        raise ModelError("lexical model is untrained, no priors for tree constraints")
    offsets = ensemble.config.offsets
    form_index = len(offsets)
    out = []
    for ckey in sorted(ensemble.trees):
        paths = []
        _tree_paths(ensemble.trees[ckey], [], paths)
        for path, leaf in paths:
            items = []
            expressible = True
            for feature, value in path:
                if feature == form_index or value is OTHER:
                    expressible = False  # target-form tests and pooled
                    break                # branches have no pattern encoding
                offset = offsets[feature]
                if offset == 0:
                    expressible = False
                    break
                if value == BOUNDARY:
                    items.append(PatternItem(offset, KIND_BOUNDARY))
                elif "|" in value:
                    items.append(PatternItem(offset, KIND_CLASS, value))
                else:
                    items.append(PatternItem(offset, KIND_TAG, value))
            if not expressible or not items:
                continue
            leaf_total = leaf.weight
            for tag in sorted(leaf.counts):
                count = leaf.counts[tag]
                prior = lexicon.unigram_counts.get(tag, 0.0) / prior_total
                if count <= 0.0 or prior <= 0.0:
                    continue
                w = _clip(math.log((count / leaf_total) / prior))
                out.append(Constraint(tag, tuple(items), w))
    return out


def compile_constraints(models: dict, kinds) -> ConstraintBase:
    """Build a constraint base from the requested information sources.

    ``models`` maps source names to trained models: "bigram" (B),
    "trigram" (T), "trees" plus "lexicon" (C).
    """
    kinds = tuple(kinds)
    if not kinds:
        raise ModelError("no constraint kinds requested")
    base = ConstraintBase(kinds=kinds)
    for kind in kinds:
        if kind == "B":
            if models.get("bigram") is None:
                raise ModelError("kind B requested without a bigram model")
            constraints = _compile_bigrams(models["bigram"])
        elif kind == "T":
            if models.get("trigram") is None:
                raise ModelError("kind T requested without a trigram model")
            constraints = _compile_trigrams(models["trigram"])
        elif kind == "C":
            if models.get("trees") is None or models.get("lexicon") is None:
                raise ModelError("kind C requested without trees and a lexicon")
            constraints = _compile_trees(models["trees"], models["lexicon"])
        else:
            raise ModelError("unknown constraint kind %r" % (kind,))
        for c in constraints:
            base.add(c)
    return base


def _match_plan(sentence, i, candidates, base):
    """Resolve each applicable constraint into (weight, crisp factor,
    soft tag lookups) for the token at position i.

    Offsets, classes and forms do not change during relaxation, so the
    crisp part of each pattern is evaluated once.
    """
    n = len(sentence)
    plans = {t: [] for t in candidates}
    for t in candidates:
        for constraint in base.by_target.get(t, ()):
            factor = 1.0
            lookups = []
            for item in constraint.pattern:
                j = i + item.offset
                inside = 0 <= j < n
                if item.kind == KIND_BOUNDARY:
                    if inside:
                        factor = 0.0
                elif not inside:
                    factor = 0.0
                elif item.kind == KIND_TAG:
                    if item.value in sentence[j].candidates:
                        lookups.append((j, item.value))
                    else:
                        factor = 0.0
                elif item.kind == KIND_CLASS:
                    if sentence[j].class_key != item.value:
                        factor = 0.0
                elif item.kind == KIND_FORM:
                    if sentence[j].form != item.value:
                        factor = 0.0
                if factor == 0.0:
                    break
            if factor != 0.0:
                plans[t].append((constraint.weight, lookups))
    return plans


def relax_iterations(sentence: Sentence, base: ConstraintBase,
                     lexical_model: LexicalModel,
                     config: RelaxConfig = None):
    """Drive the relaxation updates, yielding the per-token probability
    vectors after every simultaneous update round (initial state first)."""
    if config is None:
        config = RelaxConfig()
    n = len(sentence)
    if n == 0:
        raise ModelError("cannot disambiguate an empty sentence")
    probs = [emission_prob(lexical_model, tok) for tok in sentence]
    yield probs
    ambiguous = [i for i, tok in enumerate(sentence) if tok.is_ambiguous]
    plans = {i: _match_plan(sentence, i, sentence[i].candidates, base)
             for i in ambiguous}
    for _ in range(config.max_iters):
        max_delta = 0.0
        updated = {}
        for i in ambiguous:
            scaled = {}
            for t in sentence[i].candidates:
                support = 0.0
                for weight, lookups in plans[i][t]:
                    factor = 1.0
                    for j, tag in lookups:
                        factor *= probs[j].get(tag, 0.0)
                        if factor == 0.0:
                            break
                    support += weight * factor
                squashed = support / (1.0 + abs(support))
                scaled[t] = probs[i][t] * (1.0 + squashed)
            total = sum(scaled.values())
            updated[i] = {t: v / total for t, v in scaled.items()}
        probs = list(probs)
        for i, dist in updated.items():
            for t, p in dist.items():
                max_delta = max(max_delta, abs(p - probs[i][t]))
            probs[i] = dist
        yield probs
        if max_delta < config.epsilon:
            break


def relax_disambiguate(sentence: Sentence, base: ConstraintBase,
                       lexical_model: LexicalModel,
                       config: RelaxConfig = None) -> Tagging:
    for probs in relax_iterations(sentence, base, lexical_model, config):
        pass
    tags = []
    for i, tok in enumerate(sentence):
        best = tok.candidates[0]
        for t in tok.candidates[1:]:
            if probs[i][t] > probs[i][best]:
                best = t
        tags.append(best)
    scores = tuple(math.log(probs[i][t]) for i, t in enumerate(tags))
    return Tagging(tags=tuple(tags), scores=scores)


# --- constraint file IO: weight<TAB>target<TAB>pos:item[,pos:item...] ---

def _quote(value):
    return urllib.parse.quote(value, safe="|<>/")


def _encode_item(item: PatternItem) -> str:
    if item.kind == KIND_BOUNDARY:
        return "%d:b" % item.offset
    return "%d:%s=%s" % (item.offset, item.kind, _quote(item.value))


def _decode_item(text, lineno) -> PatternItem:
    head, sep, rest = text.partition(":")
    try:
        offset = int(head)
    except ValueError:
        raise ParseError("bad pattern offset %r" % (head,), line=lineno)
    if not sep:
        raise ParseError("pattern item missing kind: %r" % (text,), line=lineno)
    kind, eq, value = rest.partition("=")
    if kind == KIND_BOUNDARY and not eq:
        return PatternItem(offset, KIND_BOUNDARY)
    if kind in (KIND_TAG, KIND_CLASS, KIND_FORM) and eq:
        return PatternItem(offset, kind, urllib.parse.unquote(value))
    raise ParseError("bad pattern item %r" % (text,), line=lineno)


def write_constraints(base: ConstraintBase) -> str:
    lines = ["#kinds\t%s" % "".join(sorted(base.kinds))]
    for c in base.constraints:
        items = ",".join(_encode_item(item) for item in c.pattern)
        lines.append("%r\t%s\t%s" % (c.weight, c.target, items))
    return "\n".join(lines) + "\n"


def read_constraints(text: str) -> ConstraintBase:
    base = ConstraintBase()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#kinds\t"):
                base.kinds = frozenset(line.split("\t")[1])
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise ParseError("expected weight<TAB>target<TAB>pattern", line=lineno)
        try:
            weight = float(cols[0])
        except ValueError:
            raise ParseError("bad weight %r" % (cols[0],), line=lineno)
        pattern = tuple(_decode_item(p, lineno) for p in cols[2].split(","))
        base.add(Constraint(cols[1], pattern, weight))
    return base
