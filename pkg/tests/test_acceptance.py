"""Acceptance suite: one test per release criterion.

Each test prints a single CRITERION line on success so a plain
``pytest -s tests/test_acceptance.py`` doubles as the release
checklist.  Tolerances are pinned here and nowhere else.
"""

import filecmp
import json
import os
import random
import threading
import time
import urllib.request

import pytest

from tagboot.bootstrap import (BootstrapConfig, bootstrap_run,
                               error_of_combination, intersect_taggings,
                               union_tagging, weight_for_target_error)
from tagboot.cli import main
from tagboot.corpus import Corpus, Sentence, TagSet, Token, corpus_stats
from tagboot.metrics import evaluate, mcnemar_significance
from tagboot.lexicon import LexicalModel, emission_prob
from tagboot.ngrams import viterbi_decode
from tagboot.relax import (Constraint, ConstraintBase, PatternItem,
                           RelaxConfig, relax_iterations)
from tagboot.service import make_server
from tagboot.synth import SynthConfig, SyntheticGenerator, take_tokens
from tagboot.taggers import train_tagger
from tagboot.trees import Leaf, Split, learn_trees, training_features, tree_argmax

from conftest import make_corpus
from test_eval import tagging_for
from test_ngrams import brute_force_best, random_setup
from test_trees import da_context_corpus


def report(line):
    print("\nCRITERION %s" % line)


def test_criterion_1_viterbi_oracle_equivalence(tagset):
    started = time.monotonic()
    rng = random.Random(2024)
    for case in range(200):
        sentence, lexicon, model = random_setup(rng, tagset)
        got = viterbi_decode(sentence, lexicon, model)
        want_path, want_score = brute_force_best(sentence, lexicon, model)
        assert got.tags == want_path, "case %d diverged" % case
        assert got.total_score == pytest.approx(want_score, abs=1e-9)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0
    report("1 PASS viterbi == exhaustive enumeration on 200 random "
           "sentences (%.1fs)" % elapsed)


def test_criterion_2_paper_arithmetic():
    plain = error_of_combination(70000, 0.0, 195000, 0.016, 1)
    assert plain == pytest.approx(0.0118, abs=0.0005)
    double = error_of_combination(70000, 0.0, 195000, 0.016, 2)
    assert double == pytest.approx(0.0093, abs=0.0005)
    w0 = weight_for_target_error(70000, 0.0, 195000, 0.016, double)
    assert w0 == pytest.approx(2.0, abs=1e-9)
    report("2 PASS combination arithmetic: %.4f / %.4f, weight round-trip "
           "|w0-2| = %.1e" % (plain, double, abs(w0 - 2)))


def test_criterion_3_probability_hygiene():
    rng = random.Random(99)
    ts = TagSet(["A1", "B1", "C1", "D1", "E1"])
    codes = list(ts.codes)
    checked = 0

    def check(dist, candidates):
        nonlocal checked
        assert set(dist) == set(candidates)
        assert abs(sum(dist.values()) - 1.0) < 1e-9
        assert all(p >= 0.0 for p in dist.values())
        assert all(p > 0.0 for p in dist.values())  # smoothing guarantee
        checked += 1

    # randomized emission distributions
    for _ in range(4000):
        model = LexicalModel(len(codes))
        for _ in range(rng.randint(1, 8)):
            cands = tuple(rng.sample(codes, rng.randint(1, 4)))
            model.add("w%d" % rng.randrange(5), cands, rng.choice(cands),
                      rng.uniform(0.01, 9.0))
        cands = ts.order(rng.sample(codes, rng.randint(1, 5)))
        tok = Token("w%d" % rng.randrange(8), cands)
        check(emission_prob(model, tok), cands)

    # randomized relaxation iteration states
    lexicon = LexicalModel(len(codes))
    lexicon.unigram_counts = {t: rng.uniform(0.5, 5.0) for t in codes}
    while checked < 10000:
        constraints = []
        for _ in range(rng.randint(1, 12)):
            offset = rng.choice([-2, -1, 1, 2])
            kind = rng.choice("ttc")
            value = (rng.choice(codes) if kind == "t"
                     else "|".join(sorted(rng.sample(codes, 2))))
            constraints.append(Constraint(rng.choice(codes),
                                          (PatternItem(offset, kind, value),),
                                          rng.uniform(-12, 12)))
        base = ConstraintBase(constraints)
        toks = [Token("w", ts.order(rng.sample(codes, rng.randint(1, 4))))
                for _ in range(rng.randint(1, 5))]
        sentence = Sentence(toks)
        cfg = RelaxConfig(epsilon=0.0, max_iters=rng.randint(1, 6))
        for state in relax_iterations(sentence, base, lexicon, cfg):
            for tok, dist in zip(toks, state):
                check(dist, tok.candidates)
    assert checked >= 10000
    report("3 PASS %d randomized distributions sum to 1 +/- 1e-9 and stay "
           "positive" % checked)


def test_criterion_4_union_tagger_theorems(tagset):
    # exact arithmetic: 9 extra tags over 1000 tokens
    rows = [("w", ["NC", "VM"], "NC") for _ in range(1000)]
    corpus = make_corpus(tagset, [rows[i:i + 10] for i in range(0, 1000, 10)])
    result = union_tagging(corpus, [tagging_for(corpus),
                                    tagging_for(corpus, set(range(9)))])
    assert result.tags_per_word == 1.009
    assert result.fully_disambiguated == 0.991

    # theorems on random synthetic gold corpora
    gen = SyntheticGenerator(SynthConfig(seed=10, n_forms=300))
    gold = gen.corpus(3000)
    rng = random.Random(5)
    taggers = []
    for error_rate in (0.05, 0.15, 0.3):
        flips = set()
        flat = 0
        for s in gold.sentences:
            for tok in s:
                if tok.is_ambiguous and rng.random() < error_rate:
                    flips.add(flat)
                flat += 1
        taggers.append(tagging_for(gold, flips))
    for k in (2, 3):
        result = union_tagging(gold, taggers[:k])
        best = max(evaluate(t, gold).overall for t in taggers[:k])
        assert result.recall >= best
        assert all(len(ts) <= k for row in result.tag_sets for ts in row)
    report("4 PASS union recall dominates individual accuracy; "
           "1.009 tags/word and 99.1% single-tag constructions exact")


def run_bootstrap_seed(seed):
    gen = SyntheticGenerator(SynthConfig(seed=seed))
    full = gen.corpus(100_000)
    ambiguity = corpus_stats(full).ambiguous_fraction
    seed_s, rest = take_tokens(full.sentences, 5_000)
    test_s, rest = take_tokens(rest, 10_000)
    c0 = Corpus(seed_s, full.tagset)
    test = Corpus(test_s, full.tagset)

    specs = ("bigram", "relax:BT")
    taggers = [(s, train_tagger(s, [(c0, 1.0)])) for s in specs]
    taggings = {s: t.tag_corpus(test) for s, t in taggers}
    reports = {s: evaluate(taggings[s], test) for s in specs}
    agree = intersect_taggings(test, list(taggings.values()))
    amb_agreed = amb_correct = 0
    for sentence, agreed_sentence in zip(test.sentences, agree.agreed.sentences):
        for tok, atok in zip(sentence, agreed_sentence):
            if atok.gold is not None and tok.is_ambiguous:
                amb_agreed += 1
                amb_correct += atok.gold == tok.gold
    agreement_amb_acc = amb_correct / amb_agreed

    config = BootstrapConfig(taggers=specs, fresh_size=50_000,
                             c0_weight=1.0, max_iterations=1)
    run = bootstrap_run(config, c0, test, iter(rest))
    baseline_best = run.iterations[0].best_overall
    final_best = max(it.best_overall for it in run.iterations)
    coverage = run.iterations[1].coverage
    return {
        "ambiguity": ambiguity,
        "individual_amb": max(r.ambiguous_only for r in reports.values()),
        "agreement_amb": agreement_amb_acc,
        "baseline_best": baseline_best,
        "final_best": final_best,
        "coverage": coverage,
    }


def test_criterion_5_synthetic_bootstrap_experiment():
    started = time.monotonic()
    rows = [run_bootstrap_seed(seed) for seed in range(5)]
    elapsed = time.monotonic() - started

    def mean(key):
        return sum(r[key] for r in rows) / len(rows)

    assert 0.30 <= mean("ambiguity") <= 0.50  # experimental setup sanity
    lift = mean("agreement_amb") - mean("individual_amb")
    assert lift >= 0.005, "agreement lift %.4f below half a point" % lift
    drop = mean("baseline_best") - mean("final_best")
    assert drop <= 0.002, "bootstrap degraded accuracy by %.4f" % drop
    assert mean("coverage") >= 0.90
    assert elapsed < 300.0
    report("5 PASS 5-seed bootstrap: agreement lift %+.2fpt, accuracy "
           "delta %+.2fpt, coverage %.1f%%, ambiguity %.0f%% (%.0fs)"
           % (100 * lift, 100 * (mean("final_best") - mean("baseline_best")),
              100 * mean("coverage"), 100 * mean("ambiguity"), elapsed))


def test_criterion_6_decision_tree_sanity(tagset):
    corpus = da_context_corpus(tagset)
    ensemble = learn_trees([(corpus, 1.0)])
    tree = ensemble.trees["NC|VM"]
    assert isinstance(tree, Split)
    assert ensemble.config.feature_names[tree.feature] == "p-1"
    total = correct = 0
    for sentence in corpus.sentences:
        for i, tok in enumerate(sentence):
            if tok.is_ambiguous:
                feats = training_features(sentence, i, ensemble.config)
                total += 1
                correct += tree_argmax(tree, feats, tok.candidates) == tok.gold
    assert total == 100 and correct == total

    doubled = learn_trees([(corpus, 2.0)]).trees["NC|VM"]

    def shape(node):
        if isinstance(node, Leaf):
            t = node.weight
            return ("leaf", tuple(sorted((k, v / t) for k, v in node.counts.items())))
        return ("split", node.feature, node.default,
                tuple((v, shape(c)) for v, c in node.children.items()))

    assert shape(tree) == shape(doubled)
    report("6 PASS tree root tests position -1, 100% training accuracy, "
           "weight doubling leaves the tree identical")


def test_criterion_7_mcnemar():
    a = [False] * 15 + [True] * 985
    b = [True] * 1000
    stat, p, significant = mcnemar_significance(a, b, alpha=0.05)
    assert stat == pytest.approx(13.07, abs=0.01)
    assert significant
    stat0, p0, sig0 = mcnemar_significance(b, b)
    assert p0 == 1.0 and not sig0
    report("7 PASS McNemar: b=15,c=0 -> statistic %.2f (p=%.2g) significant; "
           "identical vectors -> p=1" % (stat, p))


def _write_experiment(tmp_path, seed=12):
    from tagboot.corpus import write_tagset, write_vertical
    gen = SyntheticGenerator(SynthConfig(seed=seed, n_forms=300))
    full = gen.corpus(7000)
    seed_s, rest = take_tokens(full.sentences, 1500)
    test_s, rest = take_tokens(rest, 1200)
    c0 = Corpus(seed_s, full.tagset)
    test = Corpus(test_s, full.tagset)
    raw = Corpus(rest, full.tagset).strip_gold()
    (tmp_path / "synth.tags").write_text(write_tagset(full.tagset))
    (tmp_path / "c0.vert").write_text(write_vertical(c0))
    (tmp_path / "test.vert").write_text(write_vertical(test))
    (tmp_path / "raw.vert").write_text(write_vertical(raw))
    (tmp_path / "boot.cfg").write_text("\n".join([
        "tagset = %s" % (tmp_path / "synth.tags"),
        "c0 = %s" % (tmp_path / "c0.vert"),
        "test = %s" % (tmp_path / "test.vert"),
        "raw = %s" % (tmp_path / "raw.vert"),
        "taggers = bigram,tree",
        "fresh_size = 2000",
        "c0_weight = 1.0",
        "max_iterations = 1",
    ]) + "\n")


def _tree_files(root):
    out = []
    for dirpath, _, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            out.append(os.path.relpath(path, root))
    return sorted(out)


def test_criterion_8_bootstrap_determinism(tmp_path):
    _write_experiment(tmp_path)
    for name in ("run_a", "run_b"):
        assert main(["bootstrap", "--config", str(tmp_path / "boot.cfg"),
                     "--checkpoint", str(tmp_path / name)]) == 0
    a_root, b_root = str(tmp_path / "run_a"), str(tmp_path / "run_b")
    files_a, files_b = _tree_files(a_root), _tree_files(b_root)
    assert files_a == files_b
    differing = []
    for rel in files_a:
        if not filecmp.cmp(os.path.join(a_root, rel),
                           os.path.join(b_root, rel), shallow=False):
            differing.append(rel)
    assert not differing, "non-deterministic files: %s" % differing
    assert any(rel.startswith("iter_1%smodels" % os.sep) for rel in files_a)
    assert "report.json" in files_a
    report("8 PASS two bootstrap runs produced %d byte-identical files "
           "(reports and serialized models)" % len(files_a))


def test_criterion_9_corrections_closure(tmp_path):
    _write_experiment(tmp_path, seed=13)
    ws = str(tmp_path)
    for spec, tag in (("bigram", "a"), ("tree", "b")):
        assert main(["train", "--tagset", ws + "/synth.tags",
                     "--corpus", ws + "/c0.vert", "--tagger", spec,
                     "--out", ws + "/model_" + tag]) == 0
        assert main(["tag", "--tagset", ws + "/synth.tags",
                     "--model", ws + "/model_" + tag,
                     "--corpus", ws + "/raw.vert",
                     "--out", ws + "/tagged_" + tag + ".vert"]) == 0
    assert main(["intersect", "--tagset", ws + "/synth.tags",
                 "--corpus", ws + "/raw.vert",
                 "--tagged", ws + "/tagged_a.vert",
                 "--tagged", ws + "/tagged_b.vert",
                 "--out-dir", ws + "/ckpt"]) == 0

    server = make_server(ws + "/ckpt", port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    base = "http://127.0.0.1:%d" % server.server_address[1]
    try:
        with urllib.request.urlopen(base + "/session") as resp:
            session = json.loads(resp.read())
        total = session["total"]
        assert total > 0
        annotated = 0
        while True:
            with urllib.request.urlopen(base + "/batch?n=50") as resp:
                items = json.loads(resp.read())["items"]
            if not items:
                break
            for item in items:
                payload = json.dumps({
                    "position": item["position"],
                    "tag": item["proposals"][0],
                    "annotator": "script",
                }).encode()
                req = urllib.request.Request(
                    base + "/annotation", data=payload,
                    headers={"Content-Type": "application/json"})
                with urllib.request.urlopen(req) as resp:
                    assert resp.status == 200
                annotated += 1
        assert annotated == total
        with urllib.request.urlopen(base + "/progress") as resp:
            progress = json.loads(resp.read())
        assert progress["completed"] == total and progress["remaining"] == 0
    finally:
        server.shutdown()
        server.server_close()

    assert main(["corrections-apply", "--checkpoint", ws + "/ckpt",
                 "--out", ws + "/corrected.vert"]) == 0
    from tagboot.corpus import load_tagset, parse_vertical
    tagset = load_tagset((tmp_path / "synth.tags").read_text())
    corrected = parse_vertical((tmp_path / "corrected.vert").read_text(), tagset)
    raw = parse_vertical((tmp_path / "raw.vert").read_text(), tagset)
    assert corrected.n_gold_tokens == raw.n_tokens

    # retraining on the fully corrected corpus runs cleanly, strict mode
    for spec in ("bigram", "tree", "relax:BT"):
        train_tagger(spec, [(corrected, 1.0)])
    report("9 PASS %d disagreements annotated over HTTP; corrected corpus "
           "has %d/%d gold tokens and retrains cleanly"
           % (total, corrected.n_gold_tokens, raw.n_tokens))
