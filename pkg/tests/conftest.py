import pytest

from tagboot.corpus import Corpus, Sentence, TagSet, Token


@pytest.fixture
def tagset():
    return TagSet(["DA", "NC", "VM", "AQ", "RG", "XX"])


def make_token(tagset, form, candidates, gold=None, assigned=None):
    return Token(form, tagset.order(candidates), gold=gold, assigned=assigned)


def make_corpus(tagset, sentences):
    """sentences: list of lists of (form, candidates, gold) tuples."""
    out = []
    for rows in sentences:
        toks = []
        for row in rows:
            form, candidates = row[0], row[1]
            gold = row[2] if len(row) > 2 else None
            toks.append(make_token(tagset, form, candidates, gold))
        out.append(Sentence(toks))
    return Corpus(out, tagset)
