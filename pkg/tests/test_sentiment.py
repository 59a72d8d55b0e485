import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from floodrank.sentiment import (
    Lexicon,
    Polarity,
    classify_polarity,
    load_lexicon,
    normalize,
    parse_lexicon,
    score_text,
    tokenize,
)
from floodrank.errors import DataError

LEX = Lexicon({"good": 1.9, "bad": -2.5, "great": 3.1, "five": 5.0}, frozenset({"not", "never"}))


def test_empty_text_scores_zero():
    assert score_text("", LEX) == 0.0
    assert score_text("unknown words only", LEX) == 0.0


def test_sum_fifteen():
    # 15 / sqrt(15**2 + 15), evaluated independently
    assert score_text("five five five", LEX) == pytest.approx(0.9682458365518541, abs=1e-15)


def test_not_good():
    assert score_text("not good", LEX) == pytest.approx(-0.44043357076016854, abs=1e-15)


@pytest.mark.parametrize("text, expected_sum", [
    ("not very very good", -1.9),        # negation 3 tokens back still applies
    ("not very very very good", 1.9),    # 4 tokens back: out of window
    ("good, not bad!", 1.9 + 2.5),
    ("GOOD Good good", 3 * 1.9),
])
def test_negation_window_and_tokenizing(text, expected_sum):
    assert score_text(text, LEX) == pytest.approx(normalize(expected_sum), abs=1e-15)


@pytest.mark.parametrize("score, polarity", [
    (0.05, Polarity.POSITIVE),
    (-0.05, Polarity.NEGATIVE),
    (0.0, Polarity.NEUTRAL),
    (0.049, Polarity.NEUTRAL),
    (-0.049, Polarity.NEUTRAL),
    (1.0, Polarity.POSITIVE),
])
def test_classify_polarity(score, polarity):
    assert classify_polarity(score) is polarity


def test_tokenize_keeps_contractions():
    assert tokenize("Don't stop, it's FINE") == ["don't", "stop", "it's", "fine"]


@given(st.floats(-1e3, 1e3, allow_nan=False))
def test_compound_bounded_and_odd(s):
    c = normalize(s)
    assert abs(c) < 1
    assert normalize(-s) == -c


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_compound_monotone(a, b):
    if a < b:
        assert normalize(a) < normalize(b)


@given(st.lists(st.sampled_from(["good", "bad", "great", "not", "never", "meh"]), max_size=12))
def test_negated_lexicon_flips_sign(tokens):
    text = " ".join(tokens)
    assert score_text(text, LEX.negated()) == -score_text(text, LEX)


def test_bundled_lexicon_loads():
    lex = load_lexicon()
    assert lex.valences["good"] == 1.9
    assert "not" in lex.negations
    assert all(math.isfinite(v) for v in lex.valences.values())


def test_parse_lexicon_rejects_duplicates_and_bad_values():
    with pytest.raises(DataError):
        parse_lexicon("a\t1\na\t2\n")
    with pytest.raises(DataError):
        parse_lexicon("a\tx\n")
    with pytest.raises(DataError):
        parse_lexicon("a\tinf\n")
