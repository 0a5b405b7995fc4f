"""Uniform train/tag interface over the tagger flavors.

A tagger spec is a short string: "mft", "bigram", "trigram", "tree", or
"relax:<sources>" where sources is a combination of B, T and C (e.g.
"relax:BT").  Every flavor shares the lexical model; the rest of the
machinery depends on the spec.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import List, Optional

from .corpus import Corpus, Sentence
from .errors import ConfigError, ModelError
from .metrics import mft_tag
from .lexicon import LexicalModel, read_lexicon, train_lexicon, write_lexicon
from .ngrams import (DEFAULT_BACKOFF, NgramModel, Tagging, read_ngrams,
                     train_ngrams, viterbi_decode, write_ngrams)
from .relax import (ConstraintBase, RelaxConfig, compile_constraints,
                    read_constraints, relax_disambiguate, write_constraints)
from .trees import (TreeConfig, TreeEnsemble, learn_trees, read_trees,
                    tree_disambiguate, write_trees)

KNOWN_KINDS = ("mft", "bigram", "trigram", "tree", "relax")


@dataclass
class TaggerParams:
    """Hyperparameters shared by the flavors that need them."""

    tree: TreeConfig = field(default_factory=TreeConfig)
    relax: RelaxConfig = field(default_factory=RelaxConfig)
    ngram_backoff: tuple = DEFAULT_BACKOFF


def parse_spec(spec: str):
    """Split a tagger spec into (kind, relax sources)."""
    kind, _, sources = spec.partition(":")
    if kind not in KNOWN_KINDS:
        raise ConfigError("unknown tagger spec %r" % (spec,))
    if kind == "relax":
        if not sources or any(s not in "BTC" for s in sources):
            raise ConfigError(
                "relax spec needs sources from B/T/C, got %r" % (spec,)
            )
        return kind, "".join(dict.fromkeys(sources))
    if sources:
        raise ConfigError("tagger %r takes no sources" % (spec,))
    return kind, ""


@dataclass
class TrainedTagger:
    spec: str
    lexicon: LexicalModel
    ngram: Optional[NgramModel] = None
    trees: Optional[TreeEnsemble] = None
    constraints: Optional[ConstraintBase] = None
    params: TaggerParams = field(default_factory=TaggerParams)

    def tag_sentence(self, sentence: Sentence) -> Tagging:
        kind, _ = parse_spec(self.spec)
        if kind == "mft":
            return mft_tag(self.lexicon, sentence)
        if kind in ("bigram", "trigram"):
            return viterbi_decode(sentence, self.lexicon, self.ngram)
        if kind == "tree":
            return tree_disambiguate(sentence, self.trees, self.lexicon,
                                     self.params.tree)
        return relax_disambiguate(sentence, self.constraints, self.lexicon,
                                  self.params.relax)

    def tag_corpus(self, corpus: Corpus) -> List[Tagging]:
        return [self.tag_sentence(s) for s in corpus.sentences]


def train_tagger(spec: str, weighted_corpus, params: TaggerParams = None,
                 allow_masked: bool = False) -> TrainedTagger:
    if params is None:
        params = TaggerParams()
    kind, sources = parse_spec(spec)
    segments = list(weighted_corpus)
    lexicon = train_lexicon(segments, allow_masked=allow_masked)
    tagger = TrainedTagger(spec=spec, lexicon=lexicon, params=params)
    if kind == "bigram":
        tagger.ngram = train_ngrams(segments, 2, allow_masked, params.ngram_backoff)
    elif kind == "trigram":
        tagger.ngram = train_ngrams(segments, 3, allow_masked, params.ngram_backoff)
    elif kind == "tree":
        tagger.trees = learn_trees(segments, params.tree, allow_masked)
        tagger.trees.fallback = lexicon
    elif kind == "relax":
        models = {"lexicon": lexicon}
        if "B" in sources:
            models["bigram"] = train_ngrams(segments, 2, allow_masked,
                                            params.ngram_backoff)
        if "T" in sources:
            models["trigram"] = train_ngrams(segments, 3, allow_masked,
                                             params.ngram_backoff)
        if "C" in sources:
            models["trees"] = learn_trees(segments, params.tree, allow_masked)
        tagger.constraints = compile_constraints(models, sources)
        if "B" in sources:
            tagger.ngram = models["bigram"]
        elif "T" in sources:
            tagger.ngram = models["trigram"]
        if "C" in sources:
            tagger.trees = models["trees"]
    return tagger


def save_tagger(tagger: TrainedTagger, directory: str):
    os.makedirs(directory, exist_ok=True)

    def put(name, text):
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(text)

    meta = {"spec": tagger.spec,
            "relax": {"epsilon": tagger.params.relax.epsilon,
                      "max_iters": tagger.params.relax.max_iters}}
    put("tagger.json", json.dumps(meta, sort_keys=True) + "\n")
    put("lexicon.tsv", write_lexicon(tagger.lexicon))
    if tagger.ngram is not None:
        put("ngrams.tsv", write_ngrams(tagger.ngram))
    if tagger.trees is not None:
        put("trees.sexp", write_trees(tagger.trees))
    if tagger.constraints is not None:
        put("constraints.tsv", write_constraints(tagger.constraints))


def load_tagger(directory: str) -> TrainedTagger:
    def get(name):
        path = os.path.join(directory, name)
        if not os.path.exists(path):
            return None
        with open(path, encoding="utf-8") as fh:
            return fh.read()

    meta_text = get("tagger.json")
    if meta_text is None:
        raise ModelError("no tagger.json under %s" % directory)
    meta = json.loads(meta_text)
    lex_text = get("lexicon.tsv")
    if lex_text is None:
        raise ModelError("no lexicon.tsv under %s" % directory)
    params = TaggerParams()
    if "relax" in meta:
        params.relax = RelaxConfig(**meta["relax"])
    tagger = TrainedTagger(spec=meta["spec"], lexicon=read_lexicon(lex_text),
                           params=params)
    ng = get("ngrams.tsv")
    if ng is not None:
        tagger.ngram = read_ngrams(ng)
    tr = get("trees.sexp")
    if tr is not None:
        tagger.trees = read_trees(tr)
        tagger.trees.fallback = tagger.lexicon
        params.tree = tagger.trees.config
    cb = get("constraints.tsv")
    if cb is not None:
        tagger.constraints = read_constraints(cb)
    return tagger
