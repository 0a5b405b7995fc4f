"""Malformed model files must fail with ParseError, never leak
KeyError/IndexError from the guts of the readers."""

import pytest

from tagboot.errors import ParseError
from tagboot.lexicon import read_lexicon
from tagboot.ngrams import read_ngrams
from tagboot.relax import read_constraints
from tagboot.trees import read_trees


class TestLexiconReader:
    def test_unknown_record_kind(self):
        with pytest.raises(ParseError, match="line 1"):
            read_lexicon("Z\tfoo\n")

    def test_truncated_record(self):
        with pytest.raises(ParseError):
            read_lexicon("W\tcasa\tNC\n")

    def test_non_numeric_count(self):
        with pytest.raises(ParseError):
            read_lexicon("U\tNC\tlots\n")


class TestNgramReader:
    def test_counts_before_header(self):
        with pytest.raises(ParseError):
            read_ngrams("N2\tDA\tNC\t3.0\n")

    def test_empty_file(self):
        with pytest.raises(ParseError):
            read_ngrams("")

    def test_bad_order_line(self):
        with pytest.raises(ParseError):
            read_ngrams("O\ttwo\t15\t0.7\t0.3\n")


class TestTreeReader:
    def test_empty_file(self):
        with pytest.raises(ParseError):
            read_trees("")

    def test_not_an_ensemble(self):
        with pytest.raises(ParseError):
            read_trees("(forest)")

    def test_unbalanced_parens(self):
        with pytest.raises(ParseError):
            read_trees("(ensemble (config 20.0 6 5.0 5.0 0.1 5 (-3 -2 -1 0 1 2))")

    def test_unterminated_string(self):
        with pytest.raises(ParseError):
            read_trees('(ensemble (class "NC|VM')

    def test_class_before_config(self):
        with pytest.raises(ParseError, match="config"):
            read_trees('(ensemble (class "NC|VM" (leaf ("NC" 5.0))))')

    def test_split_without_default(self):
        text = ('(ensemble (config 20.0 6 5.0 5.0 0.1 5 (-3 -2 -1 0 1 2)) '
                '(class "NC|VM" (split p-1 (branch "DA" (leaf ("NC" 5.0))))))')
        with pytest.raises(ParseError, match="default"):
            read_trees(text)


class TestConstraintReader:
    def test_wrong_column_count(self):
        with pytest.raises(ParseError, match="line 1"):
            read_constraints("1.5\tNC\n")

    def test_bad_weight(self):
        with pytest.raises(ParseError):
            read_constraints("heavy\tNC\t-1:t=DA\n")

    def test_bad_offset(self):
        with pytest.raises(ParseError):
            read_constraints("1.0\tNC\tleft:t=DA\n")

    def test_bad_item_kind(self):
        with pytest.raises(ParseError):
            read_constraints("1.0\tNC\t-1:q=DA\n")

    def test_boundary_with_value_rejected(self):
        with pytest.raises(ParseError):
            read_constraints("1.0\tNC\t-1:b=DA\n")
