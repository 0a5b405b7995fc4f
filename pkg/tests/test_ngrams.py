import itertools
import math
import random

import pytest

from tagboot.corpus import BOS, EOS, Sentence, Token
from tagboot.errors import TrainingError
from tagboot.lexicon import LexicalModel
from tagboot.ngrams import (NgramModel, read_ngrams, train_ngrams,
                            viterbi_decode, write_ngrams)

from conftest import make_corpus


class TestTrainNgrams:
    def test_bigram_padding_and_counts(self, tagset):
        c = make_corpus(tagset, [[("la", ["DA"], "DA"), ("casa", ["NC"], "NC")]])
        m = train_ngrams([(c, 1.0)], 2)
        assert m.transition_counts == {
            ((BOS,), "DA"): 1.0,
            (("DA",), "NC"): 1.0,
            (("NC",), EOS): 1.0,
        }

    def test_weight_linearity(self, tagset):
        c = make_corpus(tagset, [[("la", ["DA"], "DA"), ("casa", ["NC"], "NC")]])
        m = train_ngrams([(c, 3.0)], 2)
        assert all(v == 3.0 for v in m.transition_counts.values())

    def test_trigram_padding(self, tagset):
        c = make_corpus(tagset, [[("la", ["DA"], "DA"), ("casa", ["NC"], "NC")]])
        m = train_ngrams([(c, 1.0)], 3)
        assert ((BOS, BOS), "DA") in m.transition_counts
        assert ((BOS, "DA"), "NC") in m.transition_counts
        assert (("DA", "NC"), EOS) in m.transition_counts

    def test_against_recount_oracle(self, tagset):
        rng = random.Random(3)
        codes = list(tagset.codes)
        sentences = []
        for _ in range(100):
            rows = []
            for _ in range(rng.randint(1, 8)):
                tag = rng.choice(codes)
                rows.append(("w%d" % rng.randrange(9), [tag], tag))
            sentences.append(rows)
        c = make_corpus(tagset, sentences)
        m = train_ngrams([(c, 1.0)], 2)
        expected = {}
        for sentence in c.sentences:
            tags = [BOS] + [t.gold for t in sentence] + [EOS]
            for prev, cur in zip(tags, tags[1:]):
                expected[((prev,), cur)] = expected.get(((prev,), cur), 0.0) + 1.0
        assert m.transition_counts == expected

    def test_context_totals_match_transition_sums(self, tagset):
        rng = random.Random(5)
        codes = list(tagset.codes)
        sentences = []
        for _ in range(30):
            rows = [("w", [rng.choice(codes)]) for _ in range(rng.randint(1, 6))]
            rows = [(f, c, c[0]) for f, c, in rows]
            sentences.append(rows)
        c = make_corpus(tagset, sentences)
        for order in (2, 3):
            m = train_ngrams([(c, 1.5)], order)
            sums = {}
            for (ctx, _), count in m.transition_counts.items():
                sums[ctx] = sums.get(ctx, 0.0) + count
            for ctx, total in m.context_counts.items():
                assert total == pytest.approx(sums[ctx], abs=1e-9)

    def test_masked_windows_skipped(self, tagset):
        c = make_corpus(tagset, [[("a", ["DA"], "DA"), ("b", ["NC"]),
                                  ("c", ["VM"], "VM")]])
        with pytest.raises(TrainingError):
            train_ngrams([(c, 1.0)], 2)
        m = train_ngrams([(c, 1.0)], 2, allow_masked=True)
        # the two windows overlapping the masked middle token are gone
        assert m.transition_counts == {((BOS,), "DA"): 1.0,
                                       (("VM",), EOS): 1.0}


def brute_force_best(sentence, lexicon, model):
    """Independent oracle: enumerate every candidate sequence, score it
    with the public probability functions, keep the best with ties
    going to the earliest candidate-order difference."""
    from tagboot.lexicon import emission_prob

    pad = model.order - 1
    emissions = [emission_prob(lexicon, tok) for tok in sentence]
    ranks = [{t: r for r, t in enumerate(tok.candidates)} for tok in sentence]
    best_path, best_score = None, None
    for path in itertools.product(*(tok.candidates for tok in sentence)):
        seq = [BOS] * pad + list(path) + [EOS]
        score = 0.0
        for i in range(pad, len(seq)):
            ctx = tuple(seq[i - pad: i])
            score += math.log(model.transition_prob(ctx, seq[i]))
            if i - pad < len(path):
                score += math.log(emissions[i - pad][seq[i]])
        if best_path is None or score > best_score:
            best_path, best_score = path, score
        elif score == best_score:
            for i, (x, y) in enumerate(zip(path, best_path)):
                if x != y:
                    if ranks[i][x] < ranks[i][y]:
                        best_path = path
                    break
    return best_path, best_score


def random_setup(rng, tagset):
    """Random lexical and transition counts plus a random sentence."""
    codes = list(tagset.codes)
    lexicon = LexicalModel(len(codes))
    for _ in range(rng.randint(5, 40)):
        cands = tuple(rng.sample(codes, rng.randint(1, 4)))
        lexicon.add("w%d" % rng.randrange(10), cands, rng.choice(cands),
                    rng.choice([0.5, 1.0, 2.0]))
    order = rng.choice([2, 3])
    model = NgramModel(order, len(codes))
    for _ in range(rng.randint(5, 60)):
        ctx = tuple(rng.choice([BOS] + codes) for _ in range(order - 1))
        model.add(ctx, rng.choice(codes + [EOS]), rng.choice([1.0, 2.0]))
    toks = []
    for _ in range(rng.randint(1, 6)):
        cands = tagset.order(rng.sample(codes, rng.randint(1, 4)))
        toks.append(Token("w%d" % rng.randrange(12), cands))
    return Sentence(toks), lexicon, model


class TestViterbi:
    def test_forced_path(self, tagset):
        c = make_corpus(tagset, [[("la", ["DA"], "DA"), ("casa", ["NC"], "NC")]])
        lexicon = LexicalModel(len(tagset))
        lexicon.add("la", ("DA",), "DA", 1.0)
        lexicon.add("casa", ("NC",), "NC", 1.0)
        model = train_ngrams([(c, 1.0)], 2)
        s = Sentence([Token("la", ("DA",)), Token("casa", ("NC",))])
        assert viterbi_decode(s, lexicon, model).tags == ("DA", "NC")

    def test_two_token_hand_example(self, tagset):
        # constructed so the (DA, NC) path dominates every alternative
        lexicon = LexicalModel(len(tagset))
        for _ in range(9):
            lexicon.add("la", ("DA", "NC"), "DA", 1.0)
        lexicon.add("la", ("DA", "NC"), "NC", 1.0)
        for _ in range(8):
            lexicon.add("casa", ("NC", "VM"), "NC", 1.0)
        for _ in range(2):
            lexicon.add("casa", ("NC", "VM"), "VM", 1.0)
        model = NgramModel(2, len(tagset))
        for _ in range(7):
            model.add((BOS,), "DA", 1.0)
            model.add(("DA",), "NC", 1.0)
            model.add(("NC",), EOS, 1.0)
        s = Sentence([Token("la", ("DA", "NC")), Token("casa", ("NC", "VM"))])
        result = viterbi_decode(s, lexicon, model)
        assert result.tags == ("DA", "NC")
        oracle_path, oracle_score = brute_force_best(s, lexicon, model)
        assert result.tags == oracle_path
        assert result.total_score == pytest.approx(oracle_score)

    def test_brute_force_equivalence_small(self, tagset):
        rng = random.Random(17)
        for _ in range(60):
            sentence, lexicon, model = random_setup(rng, tagset)
            got = viterbi_decode(sentence, lexicon, model)
            want_path, want_score = brute_force_best(sentence, lexicon, model)
            assert got.tags == want_path
            assert got.total_score == pytest.approx(want_score, abs=1e-9)

    def test_decoding_is_deterministic(self, tagset):
        rng = random.Random(23)
        sentence, lexicon, model = random_setup(rng, tagset)
        a = viterbi_decode(sentence, lexicon, model)
        b = viterbi_decode(sentence, lexicon, model)
        assert a == b

    def test_respects_candidates(self, tagset):
        rng = random.Random(29)
        for _ in range(20):
            sentence, lexicon, model = random_setup(rng, tagset)
            result = viterbi_decode(sentence, lexicon, model)
            for tok, tag in zip(sentence, result.tags):
                assert tag in tok.candidates

    def test_count_scaling_keeps_argmax(self, tagset):
        rng = random.Random(31)
        for _ in range(20):
            sentence, lexicon, model = random_setup(rng, tagset)
            scaled = NgramModel(model.order, model.tagset_size)
            for (ctx, tag), count in model.transition_counts.items():
                # rebuild with every count multiplied by a common factor
                scaled.context_counts[ctx] = 0.0
            for (ctx, tag), count in model.transition_counts.items():
                scaled.transition_counts[(ctx, tag)] = count * 11.0
                scaled.context_counts[ctx] += count * 11.0
                scaled.total_weight += count * 11.0
            scaled.observations = model.observations
            if model.bigram is not None:
                scaled.bigram = NgramModel(2, model.tagset_size)
                for (ctx, tag), count in model.bigram.transition_counts.items():
                    scaled.bigram.transition_counts[(ctx, tag)] = count * 11.0
                    scaled.bigram.context_counts[ctx] = (
                        scaled.bigram.context_counts.get(ctx, 0.0) + count * 11.0)
                    scaled.bigram.total_weight += count * 11.0
                scaled.bigram.observations = model.bigram.observations
            assert (viterbi_decode(sentence, lexicon, model).tags
                    == viterbi_decode(sentence, lexicon, scaled).tags)

    def test_empty_sentence_cannot_be_built(self, tagset):
        from tagboot.errors import IntegrityError
        with pytest.raises(IntegrityError):
            Sentence([])


def test_serialization_round_trip(tagset):
    rng = random.Random(41)
    for order in (2, 3):
        _, lexicon, _ = random_setup(rng, tagset)
        c = make_corpus(tagset, [[("w", ["DA"], "DA"), ("x", ["NC"], "NC"),
                                  ("y", ["VM"], "VM")]])
        model = train_ngrams([(c, 1.5)], order)
        again = read_ngrams(write_ngrams(model))
        assert again.order == model.order
        assert again.transition_counts == model.transition_counts
        assert again.context_counts == model.context_counts
        assert again.count_scale == pytest.approx(model.count_scale)
        if order == 3:
            assert again.bigram.transition_counts == model.bigram.transition_counts
        for ctx in model.context_counts:
            for tag in tagset.codes:
                assert again.transition_prob(ctx, tag) == pytest.approx(
                    model.transition_prob(ctx, tag))
