"""Dual-tagger bootstrapping toolkit for POS-annotated corpus development."""

from .bootstrap import (AgreementResult, Annotation, BootstrapConfig,
                        BootstrapReport, Segment, WeightedCorpus,
                        apply_corrections, bootstrap_run, combine_training,
                        error_of_combination, intersect_taggings,
                        union_tagging, weight_for_target_error)
from .corpus import (Corpus, Sentence, StatsReport, TagSet, Token,
                     corpus_stats, load_candidate_dict, load_tagset,
                     parse_vertical, reduce_tags, split_corpus, write_vertical)
from .metrics import (AccuracyReport, agreement_report, evaluate,
                       mcnemar_significance, mft_tag)
from .lexicon import LexicalModel, emission_prob, train_lexicon
from .ngrams import NgramModel, Tagging, train_ngrams, viterbi_decode
from .relax import (Constraint, ConstraintBase, RelaxConfig,
                    compile_constraints, relax_disambiguate)
from .taggers import TaggerParams, TrainedTagger, load_tagger, save_tagger, train_tagger
from .trees import TreeConfig, TreeEnsemble, learn_trees, tree_disambiguate

__version__ = "0.1.0"
