"""Command-line entry points for the whole pipeline.

Every subcommand maps onto the library operations; reports and model
files are deterministic for fixed inputs, config and seeds.  Exit
codes: 0 ok, 1 usage, 2 data error, 3 internal error.  The environment
variable TAGBOOT_CONFIG overrides a missing --config.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import bootstrap as bs
from . import service, synth
from .corpus import (Corpus, corpus_stats, load_candidate_dict, load_tagset,
                     parse_vertical, write_tagset, write_vertical)
from .errors import ConfigError, DataError, TagbootError
from .metrics import evaluate, format_accuracy_table, format_accuracy_tsv
from .ngrams import Tagging
from .relax import RelaxConfig
from .taggers import TaggerParams, load_tagger, save_tagger, train_tagger
from .trees import TreeConfig

USAGE_EXIT, DATA_EXIT, INTERNAL_EXIT = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, "%s: error: %s\n" % (self.prog, message))


class Artifacts:
    """Tracks files created by a command so failures leave no partial
    outputs behind."""

    def __init__(self):
        self.created = []

    def write(self, path, text):
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        self.created.append(path)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)

    def cleanup(self):
        for path in self.created:
            if os.path.isfile(path):
                os.unlink(path)


def read_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError("cannot read %s: %s" % (path, exc))


def load_config_file(path) -> dict:
    """Flat key = value format; later keys override earlier ones."""
    config = {}
    for lineno, raw in enumerate(read_file(path).split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("%s line %d: expected key = value" % (path, lineno))
        config[key.strip()] = value.strip()
    return config


def _as_bool(value):
    if value.lower() in ("1", "true", "yes", "on"):
        return True
    if value.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError("bad boolean %r" % (value,))


def tagger_params_from(config: dict) -> TaggerParams:
    params = TaggerParams()
    tree = {}
    relax = {}
    for key, value in config.items():
        if key.startswith("tree."):
            tree[key[5:]] = value
        elif key.startswith("relax."):
            relax[key[6:]] = value
        elif key == "ngram.backoff":
            parts = [float(x) for x in value.split(",")]
            if len(parts) != 2:
                raise ConfigError("ngram.backoff needs two weights")
            params.ngram_backoff = tuple(parts)
    if tree:
        fields = dict(
            min_examples=float, max_depth=int, min_node_weight=float,
            form_pool_threshold=float, filter_ratio=float, max_sweeps=int)
        kwargs = {}
        for name, value in tree.items():
            if name not in fields:
                raise ConfigError("unknown tree option %r" % name)
            kwargs[name] = fields[name](value)
        params.tree = TreeConfig(**kwargs)
    if relax:
        kwargs = {}
        for name, value in relax.items():
            if name == "epsilon":
                kwargs["epsilon"] = float(value)
            elif name == "max_iters":
                kwargs["max_iters"] = int(value)
            else:
                raise ConfigError("unknown relax option %r" % name)
        params.relax = RelaxConfig(**kwargs)
    return params


def bootstrap_config_from(config: dict) -> bs.BootstrapConfig:
    if "taggers" not in config:
        raise ConfigError("config must list taggers")
    kwargs = dict(
        taggers=tuple(t.strip() for t in config["taggers"].split(",") if t.strip()),
        fresh_size=int(config.get("fresh_size", "10000")),
        max_iterations=int(config.get("max_iterations", "1")),
        stop_threshold=float(config.get("stop_threshold", "0.05")),
        hand_correct=_as_bool(config.get("hand_correct", "false")),
        params=tagger_params_from(config),
    )
    if "target_error" in config:
        kwargs["target_error"] = float(config["target_error"])
    else:
        kwargs["c0_weight"] = float(config.get("c0_weight", "1.0"))
    return bs.BootstrapConfig(**kwargs)


def _load_corpus(path, tagset, cand_dict=None):
    return parse_vertical(read_file(path), tagset, cand_dict)


def _corpus_paths(config: dict):
    for key in ("tagset", "c0", "test", "raw"):
        if key not in config:
            raise ConfigError("config must set %r" % key)
    tagset = load_tagset(read_file(config["tagset"]))
    cand_dict = None
    if "candidates" in config:
        cand_dict = load_candidate_dict(read_file(config["candidates"]))
    c0 = _load_corpus(config["c0"], tagset, cand_dict)
    test = _load_corpus(config["test"], tagset, cand_dict)
    raw = _load_corpus(config["raw"], tagset, cand_dict).strip_gold()
    return tagset, c0, test, raw


def _taggings_from_assigned(corpus) -> list:
    out = []
    for s_idx, sentence in enumerate(corpus.sentences):
        tags = []
        for tok in sentence:
            tag = tok.assigned if tok.assigned is not None else tok.gold
            if tag is None:
                raise DataError(
                    "sentence %d: token %r carries no tag" % (s_idx, tok.form))
            tags.append(tag)
        out.append(Tagging(tags=tuple(tags), scores=(0.0,) * len(tags)))
    return out


# --- subcommands ---

def cmd_train(args, artifacts):
    tagset = load_tagset(read_file(args.tagset))
    corpus = _load_corpus(args.corpus, tagset)
    params = tagger_params_from(load_config_file(args.config) if args.config else {})
    tagger = train_tagger(args.tagger, [(corpus, args.weight)], params)
    save_tagger(tagger, args.out)
    print("trained %s on %d tokens -> %s" % (args.tagger, corpus.n_tokens, args.out))
    return 0


def cmd_tag(args, artifacts):
    from dataclasses import replace

    from .corpus import Sentence

    tagset = load_tagset(read_file(args.tagset))
    cand_dict = load_candidate_dict(read_file(args.candidates)) if args.candidates else None
    corpus = _load_corpus(args.corpus, tagset, cand_dict)
    tagger = load_tagger(args.model)
    tagged = []
    for sentence, tagging in zip(corpus.sentences, tagger.tag_corpus(corpus)):
        tagged.append(Sentence([
            replace(tok, assigned=tag)
            for tok, tag in zip(sentence, tagging.tags)
        ]))
    artifacts.write(args.out, write_vertical(Corpus(tagged, tagset)))
    print("tagged %d tokens -> %s" % (corpus.n_tokens, args.out))
    return 0


def cmd_eval(args, artifacts):
    tagset = load_tagset(read_file(args.tagset))
    gold = _load_corpus(args.gold, tagset)
    rows = []
    for path in args.tagged:
        tagged = _load_corpus(path, tagset)
        if tagged.n_tokens != gold.n_tokens:
            raise DataError("%s does not align with the gold corpus" % path)
        name = os.path.basename(path)
        rows.append((name, evaluate(_taggings_from_assigned(tagged), gold)))
    table = format_accuracy_table(rows)
    print(table, end="")
    if args.out_dir:
        artifacts.write(os.path.join(args.out_dir, "report.txt"), table)
        artifacts.write(os.path.join(args.out_dir, "report.tsv"),
                        format_accuracy_tsv(rows))
    return 0


def cmd_intersect(args, artifacts):
    tagset = load_tagset(read_file(args.tagset))
    corpus = _load_corpus(args.corpus, tagset)
    taggings = [_taggings_from_assigned(_load_corpus(p, tagset))
                for p in args.tagged]
    result = bs.intersect_taggings(corpus, taggings)
    artifacts.write(os.path.join(args.out_dir, "agreed.vert"),
                    write_vertical(result.agreed))
    artifacts.write(os.path.join(args.out_dir, "disagreements.tsv"),
                    bs.write_disagreements(result.disagreements))
    artifacts.write(os.path.join(args.out_dir, "tagset.tags"),
                    write_tagset(tagset))
    print("coverage %.4f (%d agreed / %d tokens, %d disagreements)"
          % (result.coverage, result.agreed.n_gold_tokens,
             corpus.n_tokens, len(result.disagreements)))
    return 0


def cmd_stats(args, artifacts):
    tagset = load_tagset(read_file(args.tagset))
    corpus = _load_corpus(args.corpus, tagset)
    stats = corpus_stats(corpus)
    print("words\t%d" % stats.word_count)
    print("ambiguous_fraction\t%.4f" % stats.ambiguous_fraction)
    print("tags_per_ambiguous_word\t%.4f" % stats.mean_tags_ambiguous)
    print("tags_per_word\t%.4f" % stats.mean_tags_overall)
    return 0


def _resolve_config(args) -> dict:
    path = args.config or os.environ.get("TAGBOOT_CONFIG")
    if not path:
        raise ConfigError("no config file given (flag --config or TAGBOOT_CONFIG)")
    return load_config_file(path)


def cmd_bootstrap(args, artifacts):
    config = _resolve_config(args)
    bconfig = bootstrap_config_from(config)
    tagset, c0, test, raw = _corpus_paths(config)
    checkpoint = args.checkpoint or config.get("checkpoint")
    if checkpoint:
        os.makedirs(checkpoint, exist_ok=True)
        with open(os.path.join(checkpoint, "tagset.tags"), "w",
                  encoding="utf-8") as fh:
            fh.write(write_tagset(tagset))
    report = bs.bootstrap_run(bconfig, c0, test, iter(raw.sentences), checkpoint)
    for it in report.iterations:
        cov = "-" if it.coverage is None else "%.4f" % it.coverage
        print("iter %d: best %s overall=%.4f coverage=%s%s"
              % (it.index, it.best_tagger, it.best_overall, cov,
                 " [terminal: %s]" % it.stop_reason if it.terminal else ""))
    print("status: %s (%s)" % (report.status, report.stop_reason))
    return 0


def cmd_sweep_size(args, artifacts):
    config = _resolve_config(args)
    bconfig = bootstrap_config_from(config)
    tagset, c0, test, raw = _corpus_paths(config)
    sizes = [int(s) for s in args.sizes.split(",")]
    lines = ["fresh_size\tcoverage\testimated_error\t"
             + "\t".join("acc_%s" % s for s in bconfig.taggers)]
    for size in sizes:
        run = bs.BootstrapConfig(
            taggers=bconfig.taggers, fresh_size=size,
            c0_weight=(bconfig.c0_weight if bconfig.c0_weight is not None
                       else None),
            target_error=bconfig.target_error, max_iterations=1,
            stop_threshold=bconfig.stop_threshold, params=bconfig.params)
        report = bs.bootstrap_run(run, c0, test, iter(raw.sentences))
        last = report.iterations[-1]
        accs = [last.accuracies[s].overall if s in last.accuracies else float("nan")
                for s in bconfig.taggers]
        lines.append("%d\t%s\t%s\t%s" % (
            size,
            "" if last.coverage is None else repr(last.coverage),
            "" if last.estimated_combined_error is None
            else repr(last.estimated_combined_error),
            "\t".join(repr(a) for a in accs)))
        print(lines[-1])
    artifacts.write(args.out, "\n".join(lines) + "\n")
    return 0


DEFAULT_TARGET_ERRORS = (0.001, 0.002, 0.003, 0.004, 0.005, 0.0075, 0.01)


def cmd_sweep_weight(args, artifacts):
    """Accuracy against seed-weight grid over one shared agreement corpus."""
    config = _resolve_config(args)
    bconfig = bootstrap_config_from(config)
    tagset, c0, test, raw = _corpus_paths(config)

    seed_weighted = bs.WeightedCorpus([bs.Segment(c0, 1.0, 0.0)])
    taggers = [(s, train_tagger(s, seed_weighted, bconfig.params, allow_masked=True))
               for s in bconfig.taggers]
    test_taggings = [t.tag_corpus(test) for _, t in taggers]
    test_agree = bs.intersect_taggings(test, test_taggings)
    agreed = correct = 0
    for sentence, agreed_sentence in zip(test.sentences, test_agree.agreed.sentences):
        for tok, atok in zip(sentence, agreed_sentence):
            if atok.gold is not None:
                agreed += 1
                correct += atok.gold == tok.gold
    e_new = 1.0 - (correct / agreed if agreed else 1.0)

    fresh_sentences, _ = synth.take_tokens(raw.sentences, bconfig.fresh_size)
    if sum(len(s) for s in fresh_sentences) < bconfig.fresh_size:
        raise DataError("raw corpus smaller than fresh_size")
    fresh = Corpus(fresh_sentences, tagset)
    agreement = bs.intersect_taggings(
        fresh, [t.tag_corpus(fresh) for _, t in taggers])
    n0, n_new = c0.n_gold_tokens, agreement.agreed.n_gold_tokens

    if args.weights:
        weights = [float(w) for w in args.weights.split(",")]
    else:
        targets = ([float(t) for t in args.target_errors.split(",")]
                   if args.target_errors else DEFAULT_TARGET_ERRORS)
        weights = []
        for target in targets:
            if not 0.0 < target <= e_new:
                print("# target %r unreachable (agreed error %.5f), skipped"
                      % (target, e_new))
                continue
            weights.append(bs.weight_for_target_error(n0, 0.0, n_new, e_new, target))
    lines = ["c0_weight\tvirtual_size\tvirtual_error\t"
             + "\t".join("acc_%s" % s for s in bconfig.taggers)]
    for w0 in weights:
        weighted = bs.combine_training(c0, agreement.agreed, w0, agreed_error=e_new)
        err = bs.error_of_combination(n0, 0.0, n_new, e_new,
                                      max(w0, bs.MIN_SEGMENT_WEIGHT))
        accs = []
        for spec in bconfig.taggers:
            tagger = train_tagger(spec, weighted, bconfig.params, allow_masked=True)
            accs.append(evaluate(tagger.tag_corpus(test), test).overall)
        lines.append("%r\t%r\t%r\t%s" % (
            w0, weighted.virtual_size, err, "\t".join(repr(a) for a in accs)))
        print(lines[-1])
    artifacts.write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_annotate_serve(args, artifacts):
    return service.serve_annotation(args.checkpoint, args.bind,
                                    window=args.window, ui_dir=args.ui_dir)


def cmd_corrections_apply(args, artifacts):
    tagset = load_tagset(read_file(os.path.join(args.checkpoint, "tagset.tags")))
    agreed = parse_vertical(
        read_file(os.path.join(args.checkpoint, "agreed.vert")), tagset)
    disagreements = bs.read_disagreements(
        read_file(os.path.join(args.checkpoint, "disagreements.tsv")))
    total = agreed.n_tokens
    agreed_count = agreed.n_gold_tokens
    result_struct = bs.AgreementResult(
        agreed=agreed, disagreements=disagreements,
        coverage=agreed_count / total if total else 0.0)
    annotations = bs._load_checkpoint_annotations(
        os.path.join(args.checkpoint, "annotations.jsonl"))
    corrected = bs.apply_corrections(result_struct, annotations)
    artifacts.write(args.out, write_vertical(corrected.corpus))
    for pos, reason in corrected.rejections:
        print("rejected %s:%s: %s" % (pos[0], pos[1], reason))
    print("applied %d corrections; %d tokens now tagged of %d -> %s"
          % (corrected.applied, corrected.corpus.n_gold_tokens,
             corrected.corpus.n_tokens, args.out))
    return 0


def cmd_synth_gen(args, artifacts):
    cfg = synth.SynthConfig(n_tags=args.tags, n_forms=args.forms, seed=args.seed)
    gen = synth.SyntheticGenerator(cfg)
    corpus = gen.corpus(args.tokens)
    artifacts.write(args.out_prefix + ".tags", write_tagset(gen.tagset))
    artifacts.write(args.out_prefix + ".vert", write_vertical(corpus))
    stats = corpus_stats(corpus)
    print("generated %d tokens (%d sentences), ambiguity %.2f%%, %s.{tags,vert}"
          % (corpus.n_tokens, corpus.n_sentences,
             100 * stats.ambiguous_fraction, args.out_prefix))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="tagboot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("train", help="train one tagger on a gold corpus")
    p.add_argument("--tagset", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--tagger", required=True,
                   help="mft | bigram | trigram | tree | relax:<BTC>")
    p.add_argument("--out", required=True, help="model output directory")
    p.add_argument("--weight", type=float, default=1.0)
    p.add_argument("--config", help="hyperparameter config file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tag", help="tag an analyzed corpus with a trained model")
    p.add_argument("--tagset", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--candidates", help="candidate dictionary for bare forms")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score tagged corpora against gold")
    p.add_argument("--tagset", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--tagged", action="append", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="corpus ambiguity statistics")
    p.add_argument("--tagset", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("intersect", help="agreement corpus of several taggings")
    p.add_argument("--tagset", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--tagged", action="append", required=True,
                   help="tagged corpus file (repeat, at least twice)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("bootstrap", help="run the dual-tagger bootstrap loop")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("sweep-size", help="accuracy against fresh corpus size")
    p.add_argument("--config")
    p.add_argument("--sizes", required=True, help="comma-separated token counts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("sweep-weight", help="accuracy against seed weight")
    p.add_argument("--config")
    p.add_argument("--weights", help="comma-separated seed weights")
    p.add_argument("--target-errors",
                   help="derive weights from these target error rates")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep_weight)

    p = sub.add_parser("annotate-serve", help="serve the correction API/UI")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bind", default="127.0.0.1:8753")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--ui-dir", help="static UI bundle directory")
    p.set_defaults(func=cmd_annotate_serve)

    p = sub.add_parser("corrections-apply",
                       help="merge annotations into the agreement corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corrections_apply)

    p = sub.add_parser("synth-gen", help="generate a synthetic gold corpus")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--tokens", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tags", type=int, default=15)
    p.add_argument("--forms", type=int, default=900)
    p.set_defaults(func=cmd_synth_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    artifacts = Artifacts()
    try:
        return args.func(args, artifacts)
    except DataError as exc:
        artifacts.cleanup()
        print("tagboot: %s" % exc, file=sys.stderr)
        return DATA_EXIT
    except TagbootError as exc:
        artifacts.cleanup()
        print("tagboot: %s" % exc, file=sys.stderr)
        return INTERNAL_EXIT
    except KeyboardInterrupt:
        artifacts.cleanup()
        return INTERNAL_EXIT
    except Exception as exc:  # internal bug surface, still one line
        artifacts.cleanup()
        print("tagboot: internal error: %r" % exc, file=sys.stderr)
        return INTERNAL_EXIT


if __name__ == "__main__":
    sys.exit(main())
