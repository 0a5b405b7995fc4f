"""The dual-tagger bootstrapping loop and its building blocks.

Starting from a small hand-tagged seed corpus, every iteration tags a
fresh slice of raw text with all configured taggers, keeps the tokens
on which they unanimously agree (a much cleaner corpus than any single
tagger produces), combines that agreement corpus with the seed, with an
optional reliability weight on the seed, retrains, and stops when the
best test accuracy no longer improves significantly.

Agreement corpora keep whole sentences: disagreement positions are
masked (gold-less) so that training extraction can skip windows
overlapping them instead of splitting sentences.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterator, List, Optional

from .corpus import Corpus, Sentence, Token, write_tagset, write_vertical
from .errors import (AlignmentError, ConfigError, DataError, IntegrityError,
                     TrainingError)
from .metrics import correctness_vector, evaluate, mcnemar_significance
from .ngrams import Tagging
from .taggers import TaggerParams, save_tagger, train_tagger

MIN_SEGMENT_WEIGHT = 1e-9


@dataclass
class Segment:
    corpus: Corpus
    weight: float
    error_estimate: float

    def __post_init__(self):
        if self.weight <= 0:
            raise IntegrityError("segment weight must be positive")
        if not 0.0 <= self.error_estimate <= 1.0:
            raise IntegrityError("error estimate must be in [0, 1]")


class WeightedCorpus:
    """Training corpus made of weighted segments.

    Iterating yields (corpus, weight) pairs, the shape the training
    functions consume.
    """

    def __init__(self, segments):
        self.segments = list(segments)

    def __iter__(self):
        return iter((s.corpus, s.weight) for s in self.segments)

    def __len__(self):
        return len(self.segments)

    @property
    def virtual_size(self) -> float:
        return sum(s.weight * s.corpus.n_gold_tokens for s in self.segments)

    @property
    def real_size(self) -> int:
        return sum(s.corpus.n_gold_tokens for s in self.segments)

    @property
    def combined_error(self) -> float:
        num = sum(s.weight * s.corpus.n_gold_tokens * s.error_estimate
                  for s in self.segments)
        den = self.virtual_size
        if den == 0:
            raise DataError("weighted corpus has no trainable tokens")
        return num / den


@dataclass
class Disagreement:
    sentence_idx: int
    token_idx: int
    form: str
    candidates: tuple
    proposals: tuple


@dataclass
class AgreementResult:
    agreed: Corpus
    disagreements: List[Disagreement]
    coverage: float

    @property
    def agreed_tokens(self) -> int:
        return self.agreed.n_gold_tokens


def intersect_taggings(corpus: Corpus, taggings: List[List[Tagging]]) -> AgreementResult:
    """Keep tokens where all taggers coincide; mask the rest.

    The agreed tag is promoted to the gold slot.  Unanimity is required
    when more than two taggings are given.
    """
    if len(taggings) < 2:
        raise AlignmentError("need at least 2 taggings to intersect")
    for t_idx, tagging in enumerate(taggings):
        if len(tagging) != corpus.n_sentences:
            raise AlignmentError(
                "tagging %d has %d sentences, corpus has %d"
                % (t_idx, len(tagging), corpus.n_sentences))
    sentences = []
    disagreements = []
    agreed_count = 0
    total = 0
    for s_idx, sentence in enumerate(corpus.sentences):
        for t_idx, tagging in enumerate(taggings):
            if len(tagging[s_idx]) != len(sentence):
                raise AlignmentError(
                    "tagging %d misaligned at sentence %d" % (t_idx, s_idx))
        tokens = []
        for i, tok in enumerate(sentence):
            total += 1
            proposals = tuple(t[s_idx].tags[i] for t in taggings)
            for p in proposals:
                if p not in tok.candidates:
                    raise IntegrityError(
                        "proposal %r not among candidates of %r" % (p, tok.form))
            if len(set(proposals)) == 1:
                agreed_count += 1
                tokens.append(Token(tok.form, tok.candidates, gold=proposals[0]))
            else:
                disagreements.append(Disagreement(
                    s_idx, i, tok.form, tok.candidates, proposals))
                tokens.append(Token(tok.form, tok.candidates, gold=None))
        sentences.append(Sentence(tokens))
    if total == 0:
        raise DataError("cannot intersect over an empty corpus")
    return AgreementResult(
        agreed=Corpus(sentences, corpus.tagset),
        disagreements=disagreements,
        coverage=agreed_count / total,
    )


def error_of_combination(n0: float, e0: float, n_new: float, e_new: float,
                         w0: float) -> float:
    """Error rate of the virtual corpus mixing n0 tokens at error e0
    (weighted w0) with n_new tokens at error e_new."""
    for name, e in (("e0", e0), ("e_new", e_new)):
        if not 0.0 <= e <= 1.0:
            raise DataError("%s must be in [0, 1], got %r" % (name, e))
    if w0 < 0:
        raise DataError("w0 must be non-negative")
    den = w0 * n0 + n_new
    if den <= 0:
        raise DataError("virtual corpus is empty (both sizes zero)")
    return (w0 * n0 * e0 + n_new * e_new) / den


def weight_for_target_error(n0: float, e0: float, n_new: float, e_new: float,
                            target: float) -> float:
    """Invert error_of_combination for w0 at a desired error rate."""
    if not e0 < target <= e_new:
        raise DataError(
            "target error %r unreachable: mixing errors %r and %r can only "
            "produce rates in (%r, %r]" % (target, e0, e_new, e0, e_new))
    if n0 <= 0 or n_new <= 0:
        raise DataError("corpus sizes must be positive")
    return n_new * (e_new - target) / (n0 * (target - e0))


def combine_training(c0: Corpus, agreed: Corpus, w0: float,
                     agreed_error: float = 0.0) -> WeightedCorpus:
    """Seed + agreement corpus as a weighted training set.

    w0 = 1 is the plain addition; w0 = 0 keeps the seed at a negligible
    weight rather than dropping it.
    """
    if w0 < 0:
        raise DataError("w0 must be non-negative")
    seed = Segment(c0, max(w0, MIN_SEGMENT_WEIGHT), 0.0)
    if agreed.n_gold_tokens == 0:
        warnings.warn("agreement corpus is empty; training on the seed alone")
        return WeightedCorpus([seed])
    return WeightedCorpus([seed, Segment(agreed, 1.0, agreed_error)])


@dataclass
class UnionResult:
    tag_sets: list        # per sentence, per token: tuple of proposed tags
    recall: Optional[float]
    tags_per_word: float
    fully_disambiguated: float


def union_tagging(corpus: Corpus, taggings: List[List[Tagging]]) -> UnionResult:
    """High-recall output: each token keeps the union of all proposals."""
    if not taggings:
        raise AlignmentError("need at least one tagging")
    for t_idx, tagging in enumerate(taggings):
        if len(tagging) != corpus.n_sentences:
            raise AlignmentError("tagging %d misaligned" % t_idx)
    sets = []
    total = 0
    n_tags = 0
    single = 0
    gold_seen = 0
    gold_hit = 0
    for s_idx, sentence in enumerate(corpus.sentences):
        row = []
        for i, tok in enumerate(sentence):
            union = sorted({t[s_idx].tags[i] for t in taggings})
            row.append(tuple(union))
            total += 1
            n_tags += len(union)
            single += len(union) == 1
            if tok.gold is not None:
                gold_seen += 1
                gold_hit += tok.gold in union
        sets.append(row)
    if total == 0:
        raise DataError("empty corpus")
    return UnionResult(
        tag_sets=sets,
        recall=(gold_hit / gold_seen) if gold_seen else None,
        tags_per_word=n_tags / total,
        fully_disambiguated=single / total,
    )


@dataclass
class Annotation:
    sentence_idx: int
    token_idx: int
    tag: str
    annotator: str = ""


@dataclass
class CorrectionResult:
    corpus: Corpus
    applied: int
    rejections: list      # (position, reason)


def apply_corrections(result: AgreementResult, annotations) -> CorrectionResult:
    """Fill masked disagreement positions with human-chosen tags.

    Invalid annotations (unknown position, non-candidate tag, duplicate)
    are collected as rejections; unannotated disagreements stay masked.
    """
    listed = {(d.sentence_idx, d.token_idx): d for d in result.disagreements}
    chosen = {}
    rejections = []
    for ann in annotations:
        pos = (ann.sentence_idx, ann.token_idx)
        if pos not in listed:
            rejections.append((pos, "not a listed disagreement"))
            continue
        if ann.tag not in listed[pos].candidates:
            rejections.append(
                (pos, "tag %r not among candidates %s"
                 % (ann.tag, list(listed[pos].candidates))))
            continue
        if pos in chosen:
            rejections.append((pos, "already annotated"))
            continue
        chosen[pos] = ann.tag
    sentences = []
    for s_idx, sentence in enumerate(result.agreed.sentences):
        tokens = []
        for i, tok in enumerate(sentence):
            tag = chosen.get((s_idx, i))
            if tag is not None and tok.gold is None:
                tokens.append(replace(tok, gold=tag))
            else:
                tokens.append(tok)
        sentences.append(Sentence(tokens))
    return CorrectionResult(
        corpus=Corpus(sentences, result.agreed.tagset),
        applied=len(chosen),
        rejections=rejections,
    )


def write_disagreements(disagreements: List[Disagreement]) -> str:
    lines = []
    for d in disagreements:
        lines.append("%d\t%d\t%s\t%s\t%s" % (
            d.sentence_idx, d.token_idx, d.form,
            " ".join(d.candidates), "\t".join(d.proposals)))
    return "\n".join(lines) + ("\n" if lines else "")


def read_disagreements(text: str) -> List[Disagreement]:
    out = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 6:
            raise DataError(
                "line %d: disagreement rows need at least 6 columns" % lineno)
        out.append(Disagreement(
            int(cols[0]), int(cols[1]), cols[2],
            tuple(cols[3].split()), tuple(cols[4:])))
    return out


@dataclass
class BootstrapConfig:
    taggers: tuple
    fresh_size: int
    c0_weight: Optional[float] = None
    target_error: Optional[float] = None
    max_iterations: int = 1
    stop_threshold: float = 0.05
    hand_correct: bool = False
    params: TaggerParams = field(default_factory=TaggerParams)

    def __post_init__(self):
        self.taggers = tuple(self.taggers)
        if len(self.taggers) < 2:
            raise ConfigError("bootstrap needs at least 2 taggers")
        if (self.c0_weight is None) == (self.target_error is None):
            raise ConfigError("set exactly one of c0_weight / target_error")
        if self.c0_weight is not None and self.c0_weight < 0:
            raise ConfigError("c0_weight must be non-negative")
        if self.fresh_size <= 0:
            raise ConfigError("fresh_size must be positive")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")


@dataclass
class IterationRecord:
    index: int
    real_size: int
    virtual_size: float
    coverage: Optional[float]
    fresh_tokens: int
    estimated_agreed_error: Optional[float]
    estimated_combined_error: Optional[float]
    c0_weight: Optional[float]
    accuracies: dict                 # tagger spec -> AccuracyReport
    best_tagger: str
    best_overall: float
    test_agreement_coverage: float
    test_agreement_accuracy: Optional[float]
    corrections_applied: int = 0
    terminal: bool = False
    stop_reason: Optional[str] = None


@dataclass
class BootstrapReport:
    iterations: List[IterationRecord]
    stop_reason: str
    status: str = "finished"         # or "awaiting_corrections"

    def to_dict(self) -> dict:
        out = {"status": self.status, "stop_reason": self.stop_reason,
               "iterations": []}
        for it in self.iterations:
            row = {
                "index": it.index,
                "real_size": it.real_size,
                "virtual_size": it.virtual_size,
                "coverage": it.coverage,
                "fresh_tokens": it.fresh_tokens,
                "estimated_agreed_error": it.estimated_agreed_error,
                "estimated_combined_error": it.estimated_combined_error,
                "c0_weight": it.c0_weight,
                "best_tagger": it.best_tagger,
                "best_overall": it.best_overall,
                "test_agreement_coverage": it.test_agreement_coverage,
                "test_agreement_accuracy": it.test_agreement_accuracy,
                "corrections_applied": it.corrections_applied,
                "terminal": it.terminal,
                "stop_reason": it.stop_reason,
                "accuracies": {
                    spec: {"overall": rep.overall,
                           "ambiguous_only": rep.ambiguous_only,
                           "correct": rep.correct, "total": rep.total}
                    for spec, rep in sorted(it.accuracies.items())
                },
            }
            out["iterations"].append(row)
        return out

    def to_tsv(self) -> str:
        lines = ["iter\treal_size\tvirtual_size\tcoverage\testimated_error"
                 "\tbest_tagger\tbest_overall\tterminal"]
        for it in self.iterations:
            lines.append("%d\t%d\t%r\t%s\t%s\t%s\t%r\t%d" % (
                it.index, it.real_size, it.virtual_size,
                "" if it.coverage is None else repr(it.coverage),
                "" if it.estimated_combined_error is None
                else repr(it.estimated_combined_error),
                it.best_tagger, it.best_overall, it.terminal))
        return "\n".join(lines) + "\n"


def _draw_fresh(raw_stream: Iterator[Sentence], fresh_size: int) -> Optional[List[Sentence]]:
    """Take whole sentences until at least fresh_size tokens; None when
    the stream cannot supply that many."""
    drawn = []
    count = 0
    while count < fresh_size:
        try:
            sentence = next(raw_stream)
        except StopIteration:
            return None
        drawn.append(sentence)
        count += len(sentence)
    return drawn


def _load_checkpoint_annotations(path: str) -> List[Annotation]:
    out = []
    if not os.path.exists(path):
        return out
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            s_idx, t_idx = (int(x) for x in rec["position"].split(":"))
            out.append(Annotation(s_idx, t_idx, rec["tag"],
                                  rec.get("annotator", "")))
    return out


def bootstrap_run(config: BootstrapConfig, c0: Corpus, test: Corpus,
                  raw_stream, checkpoint_dir: Optional[str] = None) -> BootstrapReport:
    """Run the full loop; deterministic given inputs and config.

    ``raw_stream`` is an iterator (or iterable) of analyzed sentences,
    consumed sequentially and never reused.  With ``hand_correct`` set a
    checkpoint directory is required; the run suspends (status
    "awaiting_corrections") until the checkpoint's annotation log covers
    every disagreement, and re-running the same command resumes by
    replaying the deterministic pipeline.
    """
    if config.hand_correct and checkpoint_dir is None:
        raise ConfigError("hand_correct requires a checkpoint directory")
    raw_stream = iter(raw_stream.sentences if isinstance(raw_stream, Corpus)
                      else raw_stream)
    if c0.n_gold_tokens != c0.n_tokens or test.n_gold_tokens != test.n_tokens:
        raise TrainingError("seed and test corpora must be fully gold-tagged")

    def measure(taggers):
        taggings = {spec: tagger.tag_corpus(test) for spec, tagger in taggers}
        accs = {spec: evaluate(tg, test) for spec, tg in taggings.items()}
        best_spec = max(accs, key=lambda s: (accs[s].overall, s))
        test_result = intersect_taggings(test, list(taggings.values()))
        agreed = correct = 0
        for sentence, agreed_sentence in zip(test.sentences,
                                             test_result.agreed.sentences):
            for tok, agreed_tok in zip(sentence, agreed_sentence):
                if agreed_tok.gold is not None:
                    agreed += 1
                    correct += agreed_tok.gold == tok.gold
        agreement_acc = (correct / agreed) if agreed else None
        best_vector = correctness_vector(taggings[best_spec], test)
        return accs, best_spec, best_vector, test_result.coverage, agreement_acc

    labels = []
    seen = {}
    for spec in config.taggers:
        if spec in seen:
            seen[spec] += 1
            labels.append("%s#%d" % (spec, seen[spec]))
        else:
            seen[spec] = 0
            labels.append(spec)

    def train_all(weighted):
        return [(label, train_tagger(spec, weighted, config.params,
                                     allow_masked=True))
                for label, spec in zip(labels, config.taggers)]

    iterations: List[IterationRecord] = []
    weighted = WeightedCorpus([Segment(c0, 1.0, 0.0)])
    taggers = train_all(weighted)
    accs, best_spec, prev_vector, t_cov, t_acc = measure(taggers)
    iterations.append(IterationRecord(
        index=0, real_size=weighted.real_size, virtual_size=weighted.virtual_size,
        coverage=None, fresh_tokens=0, estimated_agreed_error=None,
        estimated_combined_error=None, c0_weight=None, accuracies=accs,
        best_tagger=best_spec, best_overall=accs[best_spec].overall,
        test_agreement_coverage=t_cov, test_agreement_accuracy=t_acc))
    prev_best = accs[best_spec].overall
    prev_agreement_acc = t_acc

    stop_reason = "max iterations reached"
    status = "finished"
    if config.max_iterations == 0:
        iterations[-1].terminal = True
        iterations[-1].stop_reason = stop_reason
        report = BootstrapReport(iterations, stop_reason, status)
        _write_report_files(report, checkpoint_dir)
        return report

    for k in range(1, config.max_iterations + 1):
        fresh_sentences = _draw_fresh(raw_stream, config.fresh_size)
        if fresh_sentences is None:
            stop_reason = "data exhausted"
            iterations[-1].terminal = True
            iterations[-1].stop_reason = stop_reason
            break
        fresh = Corpus(fresh_sentences, c0.tagset).strip_gold()
        taggings = [tagger.tag_corpus(fresh) for _, tagger in taggers]
        agreement = intersect_taggings(fresh, taggings)

        iter_dir = None
        corrections_applied = 0
        if checkpoint_dir is not None:
            iter_dir = os.path.join(checkpoint_dir, "iter_%d" % k)
            _write_iteration_checkpoint(iter_dir, agreement, taggers)
        training_corpus = agreement.agreed
        if config.hand_correct:
            annotations = _load_checkpoint_annotations(
                os.path.join(iter_dir, "annotations.jsonl"))
            correction = apply_corrections(agreement, annotations)
            if correction.applied < len(agreement.disagreements):
                status = "awaiting_corrections"
                stop_reason = ("awaiting corrections: %d of %d disagreements "
                               "annotated" % (correction.applied,
                                              len(agreement.disagreements)))
                iterations[-1].terminal = True
                iterations[-1].stop_reason = stop_reason
                break
            training_corpus = correction.corpus
            corrections_applied = correction.applied

        # the agreed segment's error estimate comes from the previous
        # models' measured agreement accuracy on the held-out test set
        e_new = 1.0 - (prev_agreement_acc if prev_agreement_acc is not None else 0.0)
        n_new = training_corpus.n_gold_tokens
        if corrections_applied:
            # corrected tokens are hand-tagged: dilute the estimate
            e_new = e_new * agreement.agreed_tokens / max(n_new, 1)
        if config.target_error is not None:
            if config.target_error >= e_new or e_new == 0.0:
                w0 = 1.0  # already at or below the target: plain addition
            else:
                w0 = weight_for_target_error(
                    c0.n_gold_tokens, 0.0, n_new, e_new, config.target_error)
        else:
            w0 = config.c0_weight
        weighted = combine_training(c0, training_corpus, w0, agreed_error=e_new)
        est_error = error_of_combination(
            c0.n_gold_tokens, 0.0, n_new, e_new, max(w0, MIN_SEGMENT_WEIGHT))

        taggers = train_all(weighted)
        accs, best_spec, vector, t_cov, t_acc = measure(taggers)
        stat, p_value, significant = mcnemar_significance(
            prev_vector, vector, alpha=config.stop_threshold)
        improved = significant and accs[best_spec].overall > prev_best

        record = IterationRecord(
            index=k, real_size=weighted.real_size,
            virtual_size=weighted.virtual_size, coverage=agreement.coverage,
            fresh_tokens=fresh.n_tokens, estimated_agreed_error=e_new,
            estimated_combined_error=est_error, c0_weight=w0, accuracies=accs,
            best_tagger=best_spec, best_overall=accs[best_spec].overall,
            test_agreement_coverage=t_cov, test_agreement_accuracy=t_acc,
            corrections_applied=corrections_applied)
        iterations.append(record)
        if iter_dir is not None:
            _write_iteration_models(iter_dir, taggers)
            with open(os.path.join(iter_dir, "fragment.json"), "w",
                      encoding="utf-8") as fh:
                json.dump(BootstrapReport([record], "").to_dict()["iterations"][0],
                          fh, sort_keys=True, indent=1)
                fh.write("\n")

        prev_vector = vector
        prev_agreement_acc = t_acc
        if not improved:
            stop_reason = ("no significant improvement (p=%.4g, delta=%.4g)"
                           % (p_value, accs[best_spec].overall - prev_best))
            record.terminal = True
            record.stop_reason = stop_reason
            break
        prev_best = accs[best_spec].overall
        if k == config.max_iterations:
            record.terminal = True
            record.stop_reason = stop_reason

    report = BootstrapReport(iterations, stop_reason, status)
    _write_report_files(report, checkpoint_dir)
    return report


def _write_iteration_checkpoint(iter_dir: str, agreement: AgreementResult,
                                taggers):
    os.makedirs(iter_dir, exist_ok=True)
    with open(os.path.join(iter_dir, "tagset.tags"), "w", encoding="utf-8") as fh:
        fh.write(write_tagset(agreement.agreed.tagset))
    with open(os.path.join(iter_dir, "agreed.vert"), "w", encoding="utf-8") as fh:
        fh.write(write_vertical(agreement.agreed))
    with open(os.path.join(iter_dir, "disagreements.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write(write_disagreements(agreement.disagreements))


def _write_iteration_models(iter_dir: str, taggers):
    for spec, tagger in taggers:
        save_tagger(tagger, os.path.join(iter_dir, "models",
                                         spec.replace(":", "_")))


def _write_report_files(report: BootstrapReport, checkpoint_dir: Optional[str]):
    if checkpoint_dir is None:
        return
    os.makedirs(checkpoint_dir, exist_ok=True)
    with open(os.path.join(checkpoint_dir, "report.json"), "w",
              encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(checkpoint_dir, "report.tsv"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_tsv())
