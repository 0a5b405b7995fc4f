import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tagboot.corpus import (Corpus, Sentence, TagSet, Token, corpus_stats,
                            load_candidate_dict, load_tagset, parse_vertical,
                            reduce_tags, split_corpus, write_tagset,
                            write_vertical)
from tagboot.errors import IntegrityError, ParseError, TrainingError

from conftest import make_corpus


class TestParseVertical:
    def test_single_candidate_line(self, tagset):
        c = parse_vertical("la\tDA\n", tagset)
        assert c.n_sentences == 1 and c.n_tokens == 1
        tok = c.sentences[0][0]
        assert tok.candidates == ("DA",) and not tok.is_ambiguous

    def test_gold_column(self, tagset):
        c = parse_vertical("casa\tNC VM\tNC\n", tagset)
        tok = c.sentences[0][0]
        assert len(tok.candidates) == 2
        assert tok.gold == "NC"

    def test_gold_outside_candidates(self, tagset):
        with pytest.raises(IntegrityError, match="line 1"):
            parse_vertical("casa\tNC VM\tAQ\n", tagset)

    def test_unknown_tag_has_line_number(self, tagset):
        with pytest.raises(ParseError, match="line 2"):
            parse_vertical("la\tDA\ncasa\tZZ\n", tagset)

    def test_empty_input_is_empty_corpus(self, tagset):
        assert parse_vertical("", tagset).n_sentences == 0

    def test_blank_line_splits_sentences(self, tagset):
        c = parse_vertical("la\tDA\n\n\ncasa\tNC\n", tagset)
        assert c.n_sentences == 2

    def test_comments_ignored(self, tagset):
        c = parse_vertical("# header\nla\tDA\n", tagset)
        assert c.n_tokens == 1

    def test_bare_form_gets_dictionary_candidates(self, tagset):
        c = parse_vertical("casa\n", tagset, cand_dict={"casa": ("NC", "VM")})
        assert c.sentences[0][0].candidates == ("NC", "VM")

    def test_bare_form_falls_back_to_full_tagset(self, tagset):
        c = parse_vertical("zzz\n", tagset)
        assert c.sentences[0][0].candidates == tuple(tagset.codes)

    def test_candidates_stored_in_tagset_order(self, tagset):
        c = parse_vertical("casa\tVM NC\n", tagset)
        assert c.sentences[0][0].candidates == ("NC", "VM")


class TestCorpusStats:
    def test_all_unambiguous(self, tagset):
        c = make_corpus(tagset, [[("a", ["DA"]), ("b", ["NC"]), ("c", ["VM"]),
                                  ("d", ["AQ"]), ("e", ["RG"])]])
        s = corpus_stats(c)
        assert s.ambiguous_fraction == 0.0
        assert s.mean_tags_ambiguous == 0.0 and s.no_ambiguous_tokens
        assert s.mean_tags_overall == 1.0

    def test_mixed_arithmetic(self, tagset):
        c = make_corpus(tagset, [[("a", ["DA", "NC"]), ("b", ["NC", "VM", "AQ"]),
                                  ("c", ["VM"]), ("d", ["AQ"]), ("e", ["RG"])]])
        s = corpus_stats(c)
        assert s.ambiguous_fraction == pytest.approx(0.4)
        assert s.mean_tags_ambiguous == pytest.approx(2.5)
        assert s.mean_tags_overall == pytest.approx(1.6)

    def test_against_recount_oracle(self, tagset):
        rng = random.Random(7)
        codes = list(tagset.codes)
        sentences = []
        for _ in range(100):
            rows = []
            for _ in range(10):
                k = rng.choice([1, 1, 2, 3])
                rows.append(("w%d" % rng.randrange(50), rng.sample(codes, k)))
            sentences.append(rows)
        c = make_corpus(tagset, sentences)
        # independent recount, token by token
        n = amb = tag_total = amb_tags = 0
        for sentence in c.sentences:
            for tok in sentence:
                n += 1
                tag_total += len(tok.candidates)
                if len(tok.candidates) >= 2:
                    amb += 1
                    amb_tags += len(tok.candidates)
        s = corpus_stats(c)
        assert s.word_count == n == 1000
        assert s.ambiguous_fraction == pytest.approx(amb / n)
        assert s.mean_tags_ambiguous == pytest.approx(amb_tags / amb)
        assert s.mean_tags_overall == pytest.approx(tag_total / n)

    def test_empty_corpus_is_an_error(self, tagset):
        with pytest.raises(TrainingError):
            corpus_stats(Corpus([], tagset))


class TestSplitCorpus:
    def _corpus(self, tagset, n):
        return make_corpus(tagset, [[("w%d" % i, ["DA"])] for i in range(n)])

    def test_cardinality(self, tagset):
        train, test = split_corpus(self._corpus(tagset, 10), 0.8, 42)
        assert train.n_sentences == 8 and test.n_sentences == 2

    def test_even_split(self, tagset):
        train, test = split_corpus(self._corpus(tagset, 4), 0.5, 0)
        assert train.n_sentences == 2 and test.n_sentences == 2

    def test_deterministic(self, tagset):
        c = self._corpus(tagset, 30)
        a = split_corpus(c, 0.7, 99)
        b = split_corpus(c, 0.7, 99)
        assert a == b

    def test_partition(self, tagset):
        c = self._corpus(tagset, 17)
        train, test = split_corpus(c, 0.6, 5)
        assert train.n_sentences + test.n_sentences == 17
        train_forms = {s[0].form for s in train.sentences}
        test_forms = {s[0].form for s in test.sentences}
        assert not (train_forms & test_forms)

    def test_too_small(self, tagset):
        with pytest.raises(TrainingError):
            split_corpus(self._corpus(tagset, 1), 0.5, 0)


class TestReduceTags:
    def test_prefix_merge(self):
        ts = TagSet(["VMIP3S0", "VMIS3S0", "DA0MS0"])
        c = make_corpus(ts, [[("canta", ["VMIP3S0", "VMIS3S0"], "VMIP3S0")]])
        r = reduce_tags(c)
        tok = r.sentences[0][0]
        assert tok.candidates == ("VM",)
        assert tok.gold == "VM"
        assert not tok.is_ambiguous

    def test_idempotent(self):
        ts = TagSet(["VMIP3S0", "VMIS3S0", "DA0MS0", "NC0001"])
        c = make_corpus(ts, [[("el", ["DA0MS0"]), ("canta", ["VMIP3S0", "NC0001"])]])
        once = reduce_tags(c)
        twice = reduce_tags(once)
        assert once == twice

    def test_explicit_reduction_column(self):
        ts = load_tagset("VMIP3S0\tV\nNC0001\tN\n")
        assert ts.reduced("VMIP3S0") == "V"
        c = make_corpus(ts, [[("w", ["VMIP3S0", "NC0001"], "NC0001")]])
        r = reduce_tags(c)
        assert r.sentences[0][0].candidates == ("V", "N")
        assert r.sentences[0][0].gold == "N"


class TestTagsetFiles:
    def test_round_trip(self):
        ts = load_tagset("VMIP3S0\tV\nNC0001\nDA0\n")
        again = load_tagset(write_tagset(ts))
        assert again == ts

    def test_duplicate_code_rejected(self):
        with pytest.raises(IntegrityError):
            load_tagset("DA\nDA\n")

    def test_reserved_codes_rejected(self):
        with pytest.raises(IntegrityError):
            TagSet(["DA", "<s>"])
        with pytest.raises(IntegrityError):
            TagSet(["A|B"])


def test_candidate_dict_parsing():
    d = load_candidate_dict("casa\tNC VM\nla\tDA\n")
    assert d == {"casa": ("NC", "VM"), "la": ("DA",)}
    with pytest.raises(ParseError):
        load_candidate_dict("casa\n")


@st.composite
def corpora(draw):
    ts = TagSet(["DA", "NC", "VM", "AQ"])
    n_sentences = draw(st.integers(1, 4))
    sentences = []
    for _ in range(n_sentences):
        n_tokens = draw(st.integers(1, 5))
        toks = []
        for _ in range(n_tokens):
            form = draw(st.text("abcxyz", min_size=1, max_size=5))
            cands = ts.order(draw(st.sets(st.sampled_from(ts.codes),
                                          min_size=1, max_size=4)))
            gold = draw(st.sampled_from((None,) + cands))
            assigned = draw(st.sampled_from((None,) + cands))
            toks.append(Token(form, cands, gold, assigned))
        sentences.append(Sentence(toks))
    return Corpus(sentences, ts)


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_vertical_round_trip(corpus):
    text = write_vertical(corpus)
    assert parse_vertical(text, corpus.tagset) == corpus
