"""Synthetic gold corpora from a randomized HMM.

The generator draws tag sequences from a peaked random transition
matrix and word forms from per-tag Zipf-weighted emission tables.  A
form's candidate set is the set of tags that can emit it, so ambiguity
is induced by the lexicon exactly as a morphological analyzer would,
and the generating model is a known oracle for experiments.
"""

from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass

from .corpus import Corpus, Sentence, TagSet, Token


@dataclass
class SynthConfig:
    n_tags: int = 15
    n_forms: int = 900
    # tuned so lexicon-induced token ambiguity lands near 40%
    ambiguous_form_fraction: float = 0.21
    max_class_size: int = 3
    zipf_exponent: float = 0.9
    transition_decay: float = 0.45   # lower = more peaked transitions
    min_sentence_len: int = 5
    max_sentence_len: int = 22
    seed: int = 0


class _Sampler:
    """Cumulative-weight categorical sampler."""

    def __init__(self, items, weights):
        self.items = list(items)
        self.cum = list(itertools.accumulate(weights))

    def draw(self, rng):
        x = rng.random() * self.cum[-1]
        return self.items[bisect.bisect_right(self.cum, x)]


class SyntheticGenerator:
    def __init__(self, config: SynthConfig = None):
        self.config = config or SynthConfig()
        cfg = self.config
        rng = random.Random(cfg.seed)
        self.tags = ["T%02d" % (i + 1) for i in range(cfg.n_tags)]
        self.tagset = TagSet(self.tags)

        # peaked random transitions: each context ranks the tags and
        # weights them geometrically
        self.transitions = {}
        for ctx in ["<start>"] + self.tags:
            order = self.tags[:]
            rng.shuffle(order)
            weights = [cfg.transition_decay ** rank for rank in range(len(order))]
            self.transitions[ctx] = _Sampler(order, weights)

        # vocabulary: every form gets an emitter tag set
        self.form_tags = {}
        forms = ["w%04d" % i for i in range(cfg.n_forms)]
        for form in forms:
            if rng.random() < cfg.ambiguous_form_fraction:
                size = rng.randint(2, cfg.max_class_size)
                emitters = rng.sample(self.tags, size)
            else:
                emitters = [rng.choice(self.tags)]
            self.form_tags[form] = tuple(emitters)

        # per-tag Zipf emission over the forms that list the tag
        self.emissions = {}
        by_tag = {t: [] for t in self.tags}
        for form in forms:
            for t in self.form_tags[form]:
                by_tag[t].append(form)
        for t, tag_forms in by_tag.items():
            if not tag_forms:
                # make sure every tag can emit something
                form = rng.choice(forms)
                self.form_tags[form] = tuple(sorted(set(self.form_tags[form]) | {t}))
                tag_forms = [form]
            rng.shuffle(tag_forms)
            weights = [1.0 / (rank + 1) ** cfg.zipf_exponent
                       for rank in range(len(tag_forms))]
            self.emissions[t] = _Sampler(tag_forms, weights)

        self.rng = rng

    def sentence(self) -> Sentence:
        cfg = self.config
        length = self.rng.randint(cfg.min_sentence_len, cfg.max_sentence_len)
        tokens = []
        ctx = "<start>"
        for _ in range(length):
            tag = self.transitions[ctx].draw(self.rng)
            form = self.emissions[tag].draw(self.rng)
            candidates = self.tagset.order(self.form_tags[form])
            tokens.append(Token(form, candidates, gold=tag))
            ctx = tag
        return Sentence(tokens)

    def corpus(self, n_tokens: int) -> Corpus:
        sentences = []
        count = 0
        while count < n_tokens:
            s = self.sentence()
            sentences.append(s)
            count += len(s)
        return Corpus(sentences, self.tagset)


def take_tokens(sentences, n_tokens: int):
    """Split a sentence list at the first boundary past n_tokens.

    Returns (head, tail); head holds whole sentences totalling at least
    n_tokens (all of them when the input is too short).
    """
    head = []
    count = 0
    for i, s in enumerate(sentences):
        if count >= n_tokens:
            return head, list(sentences[i:])
        head.append(s)
        count += len(s)
    return head, []
