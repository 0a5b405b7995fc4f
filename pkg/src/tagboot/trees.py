"""Per-ambiguity-class statistical decision trees.

One tree is learned for every ambiguity class with enough weighted
training examples.  An example describes a context window around the
target token (default offsets -3..+2) plus the target word form; window
items hold the neighbour's tag where it is resolved, its ambiguity
class identifier otherwise, and an out-of-sentence marker beyond the
sentence edge.  Left positions are taken as resolved (tagging proceeds
left to right), right positions only when unambiguous.

Trees are grown by recursive n-ary splitting on the feature with the
best gain ratio over weighted counts.  Disambiguation applies the trees
in repeated left-to-right sweeps, multiplying leaf distributions into
each still-ambiguous token's distribution and filtering out candidates
far below the current maximum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .corpus import BOUNDARY, Corpus, Sentence
from .errors import ModelError, ParseError, TrainingError
from .lexicon import LexicalModel, emission_prob
from .ngrams import Tagging

OTHER = object()  # pooled rare word-form branch marker


@dataclass
class TreeConfig:
    min_examples: float = 20.0       # weighted examples needed to grow a tree
    max_depth: int = 6
    min_node_weight: float = 5.0     # smallest allowed node/leaf weight
    form_pool_threshold: float = 5.0  # rarer form values pool into OTHER
    filter_ratio: float = 0.1        # drop candidates below ratio * max prob
    max_sweeps: int = 5
    offsets: tuple = (-3, -2, -1, 0, 1, 2)

    @property
    def feature_names(self):
        return tuple("p%+d" % o for o in self.offsets) + ("form",)


@dataclass
class ContextExample:
    features: tuple   # one value per window offset, plus the target form
    label: str
    weight: float


@dataclass
class Leaf:
    counts: dict      # tag -> weighted count

    @property
    def weight(self):
        return sum(self.counts.values())


@dataclass
class Split:
    feature: int      # index into (offsets..., form)
    children: dict    # feature value -> Leaf | Split (OTHER key possible)
    default: object   # value of the heaviest child, for unseen values

    @property
    def weight(self):
        return sum(c.weight for c in self.children.values())


@dataclass
class TreeEnsemble:
    trees: dict                       # class key -> Leaf | Split
    config: TreeConfig
    fallback: LexicalModel = None     # used for classes without a tree


def _window_feature(sentence, i, offset, use_gold_left):
    j = i + offset
    if j < 0 or j >= len(sentence):
        return BOUNDARY
    tok = sentence[j]
    if offset == 0:
        return tok.class_key
    if offset < 0 and use_gold_left:
        return tok.gold
    if len(tok.candidates) == 1:
        return tok.candidates[0]
    return tok.class_key


def training_features(sentence: Sentence, i: int, config: TreeConfig):
    """Feature vector for the token at position i, or None when the
    window overlaps a masked (gold-less) token."""
    values = []
    for offset in config.offsets:
        j = i + offset
        if 0 <= j < len(sentence) and sentence[j].gold is None:
            return None
        values.append(_window_feature(sentence, i, offset, use_gold_left=True))
    return tuple(values) + (sentence[i].form,)


def extract_examples(corpus: Corpus, weight: float, config: TreeConfig,
                     allow_masked: bool = False, into: dict = None) -> dict:
    """Collect weighted context examples grouped by ambiguity class."""
    examples = into if into is not None else {}
    for sentence in corpus.sentences:
        for i, tok in enumerate(sentence):
            if tok.gold is None and not allow_masked:
                raise TrainingError("token without gold tag: %r" % (tok.form,))
            if tok.gold is None or not tok.is_ambiguous:
                continue
            feats = training_features(sentence, i, config)
            if feats is None:
                continue
            examples.setdefault(tok.class_key, []).append(
                ContextExample(feats, tok.gold, weight)
            )
    return examples


def _entropy(dist: dict, total: float) -> float:
    h = 0.0
    for w in dist.values():
        if w > 0.0:
            p = w / total
            h -= p * math.log2(p)
    return h


def _label_dist(examples):
    dist = {}
    for ex in examples:
        dist[ex.label] = dist.get(ex.label, 0.0) + ex.weight
    return dist


def _partition(examples, feature, config):
    """Group examples by feature value.

    Values too light to stand alone pool into an OTHER branch (for the
    form feature that is also the rare-word generalization).  An OTHER
    branch that is itself below the node-weight floor folds into the
    heaviest branch, which keeps every branch above the floor and makes
    unseen values at application time follow the heaviest child.
    """
    form_index = len(config.offsets)
    threshold = (config.form_pool_threshold if feature == form_index
                 else config.min_node_weight)
    groups = {}
    for ex in examples:
        groups.setdefault(ex.features[feature], []).append(ex)
    weights = {v: sum(e.weight for e in g) for v, g in groups.items()}
    light = [v for v in groups if weights[v] < threshold]
    if not light:
        return groups
    if len(light) == len(groups):
        return {OTHER: examples}
    pooled = []
    for v in light:
        pooled.extend(groups.pop(v))
    if sum(e.weight for e in pooled) >= config.min_node_weight:
        groups[OTHER] = pooled
    else:
        heaviest = max(groups, key=lambda v: weights[v])
        groups[heaviest] = groups[heaviest] + pooled
    return groups


def _grow(examples, depth, config: TreeConfig):
    dist = _label_dist(examples)
    total = sum(dist.values())
    if (
        depth >= config.max_depth
        or total < config.min_node_weight
        or len(dist) < 2
    ):
        return Leaf(dist)
    node_entropy = _entropy(dist, total)
    best = None  # (gain_ratio, feature, groups)
    n_features = len(config.offsets) + 1
    for feature in range(n_features):
        groups = _partition(examples, feature, config)
        if len(groups) < 2:
            continue
        weights = {v: sum(e.weight for e in g) for v, g in groups.items()}
        if min(weights.values()) < config.min_node_weight:
            continue
        gain = node_entropy
        split_info = 0.0
        for value, group in groups.items():
            w = weights[value]
            gain -= (w / total) * _entropy(_label_dist(group), w)
            split_info -= (w / total) * math.log2(w / total)
        if gain <= 1e-12 or split_info <= 0.0:
            continue
        ratio = gain / split_info
        if best is None or ratio > best[0] + 1e-12:
            best = (ratio, feature, groups)
    if best is None:
        return Leaf(dist)
    _, feature, groups = best
    children = {
        value: _grow(group, depth + 1, config)
        for value, group in sorted(groups.items(), key=lambda kv: _branch_sort(kv[0]))
    }
    default = max(
        children, key=lambda v: (children[v].weight, -_branch_rank(children, v))
    )
    return Split(feature, children, default)


def _branch_sort(value):
    return (1, "") if value is OTHER else (0, value)


def _branch_rank(children, value):
    for rank, v in enumerate(children):
        if v == value or v is value:
            return rank
    return len(children)


def learn_trees(weighted_corpus, config: TreeConfig = None,
                allow_masked: bool = False) -> TreeEnsemble:
    """Grow one tree per ambiguity class with enough weighted examples."""
    if config is None:
        config = TreeConfig()
    examples = {}
    for corpus, weight in weighted_corpus:
        if weight <= 0:
            raise TrainingError("segment has non-positive weight %r" % (weight,))
        extract_examples(corpus, weight, config, allow_masked, into=examples)
    trees = {}
    for ckey in sorted(examples):
        group = examples[ckey]
        if sum(e.weight for e in group) < config.min_examples:
            continue
        trees[ckey] = _grow(group, 0, config)
    return TreeEnsemble(trees, config)


def classify(tree, features, candidates) -> dict:
    """Leaf probability over the ambiguity class, Laplace-corrected."""
    node = tree
    while isinstance(node, Split):
        value = features[node.feature]
        if value in node.children:
            node = node.children[value]
        elif OTHER in node.children:
            node = node.children[OTHER]
        else:
            node = node.children[node.default]
    total = node.weight + len(candidates)
    return {t: (node.counts.get(t, 0.0) + 1.0) / total for t in candidates}


def tree_argmax(tree, features, candidates) -> str:
    probs = classify(tree, features, candidates)
    best = candidates[0]
    for t in candidates[1:]:
        if probs[t] > probs[best]:
            best = t
    return best


def tree_disambiguate(sentence: Sentence, ensemble: TreeEnsemble,
                      lexical_model: LexicalModel,
                      config: TreeConfig = None) -> Tagging:
    """Iterative sweep-and-filter disambiguation."""
    if config is None:
        config = ensemble.config
    n = len(sentence)
    if n == 0:
        raise ModelError("cannot disambiguate an empty sentence")
    dists = [emission_prob(lexical_model, tok) for tok in sentence]
    remaining = [list(tok.candidates) for tok in sentence]

    def best(i):
        cands = remaining[i]
        top = cands[0]
        for t in cands[1:]:
            if dists[i][t] > dists[i][top]:
                top = t
        return top

    def app_feature(i, offset):
        j = i + offset
        if j < 0 or j >= n:
            return BOUNDARY
        if offset == 0:
            return sentence[j].class_key
        if offset < 0:
            return best(j)
        if len(remaining[j]) == 1:
            return remaining[j][0]
        return sentence[j].class_key

    for _ in range(config.max_sweeps):
        changed = False
        for i, tok in enumerate(sentence):
            if len(remaining[i]) < 2:
                continue
            tree = ensemble.trees.get(tok.class_key)
            if tree is None:
                continue
            feats = tuple(app_feature(i, o) for o in config.offsets) + (tok.form,)
            leaf = classify(tree, feats, tok.candidates)
            new = {t: dists[i][t] * leaf[t] for t in remaining[i]}
            total = sum(new.values())
            new = {t: p / total for t, p in new.items()}
            top = max(new.values())
            kept = [t for t in remaining[i] if new[t] >= config.filter_ratio * top]
            if len(kept) != len(remaining[i]):
                changed = True
                remaining[i] = kept
                total = sum(new[t] for t in kept)
                new = {t: new[t] / total for t in kept}
            if any(abs(new[t] - dists[i].get(t, 0.0)) > 1e-12 for t in kept):
                changed = True
            dists[i] = new
        if not changed:
            break
    tags = tuple(best(i) for i in range(n))
    scores = tuple(math.log(dists[i][tags[i]]) for i in range(n))
    return Tagging(tags=tags, scores=scores)


# --- serialization: nested parenthesized format (see docs/formats.md) ---

def _atom(value):
    return json.dumps(value, ensure_ascii=False)


def _write_node(node, config, out, indent):
    pad = "  " * indent
    if isinstance(node, Leaf):
        counts = " ".join(
            "(%s %r)" % (_atom(t), c) for t, c in sorted(node.counts.items())
        )
        out.append("%s(leaf %s)" % (pad, counts))
        return
    out.append("%s(split %s" % (pad, config.feature_names[node.feature]))
    for value, child in node.children.items():
        head = "(other" if value is OTHER else "(branch %s" % _atom(value)
        out.append("%s  %s" % (pad, head))
        _write_node(child, config, out, indent + 2)
        out[-1] += ")"
    out.append("%s  (default %s))" % (
        pad, "other" if node.default is OTHER else _atom(node.default)))


def write_trees(ensemble: TreeEnsemble) -> str:
    out = ["(ensemble"]
    cfg = ensemble.config
    out.append("  (config %r %d %r %r %r %d (%s))" % (
        cfg.min_examples, cfg.max_depth, cfg.min_node_weight,
        cfg.form_pool_threshold, cfg.filter_ratio, cfg.max_sweeps,
        " ".join(str(o) for o in cfg.offsets)))
    for ckey in sorted(ensemble.trees):
        out.append("  (class %s" % _atom(ckey))
        _write_node(ensemble.trees[ckey], cfg, out, 2)
        out[-1] += ")"
    out.append(")")
    return "\n".join(out) + "\n"


def _tokenize_sexpr(text):
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch
            i += 1
        elif ch == '"':
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                elif text[j] == '"':
                    break
                else:
                    j += 1
            if j >= n:
                raise ParseError("unterminated string in tree file")
            yield json.loads(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def _parse_sexpr(tokens):
    try:
        tok = next(tokens)
    except StopIteration:
        raise ParseError("empty tree file")
    if tok != "(":
        raise ParseError("tree file must start with an open parenthesis")
    return _parse_list_tail(tokens)


def _parse_list_tail(tokens):
    items = []
    for nxt in tokens:
        if nxt == ")":
            return items
        if nxt == "(":
            items.append(_parse_list_tail(tokens))
        else:
            items.append(nxt)
    raise ParseError("unbalanced parentheses in tree file")


def _node_from_sexpr(expr, config):
    if expr[0] == "leaf":
        counts = {pair[0]: float(pair[1]) for pair in expr[1:]}
        return Leaf(counts)
    if expr[0] != "split":
        raise ParseError("expected leaf or split, got %r" % (expr[0],))
    feature = config.feature_names.index(expr[1])
    children = {}
    default = None
    for item in expr[2:]:
        if item[0] == "branch":
            children[item[1]] = _node_from_sexpr(item[2], config)
        elif item[0] == "other":
            children[OTHER] = _node_from_sexpr(item[1], config)
        elif item[0] == "default":
            default = OTHER if item[1] == "other" else item[1]
        else:
            raise ParseError("unexpected %r in split" % (item[0],))
    if default is None:
        raise ParseError("split without default branch")
    return Split(feature, children, default)


def read_trees(text: str) -> TreeEnsemble:
    expr = _parse_sexpr(_tokenize_sexpr(text))
    if not expr or expr[0] != "ensemble":
        raise ParseError("not a tree ensemble file")
    config = None
    trees = {}
    for item in expr[1:]:
        if item[0] == "config":
            config = TreeConfig(
                min_examples=float(item[1]), max_depth=int(item[2]),
                min_node_weight=float(item[3]), form_pool_threshold=float(item[4]),
                filter_ratio=float(item[5]), max_sweeps=int(item[6]),
                offsets=tuple(int(o) for o in item[7]))
        elif item[0] == "class":
            if config is None:
                raise ParseError("class before config in tree file")
            trees[item[1]] = _node_from_sexpr(item[2], config)
        else:
            raise ParseError("unexpected %r in ensemble" % (item[0],))
    if config is None:
        raise ParseError("tree file missing config")
    return TreeEnsemble(trees, config)
