"""Lexicon sentiment scorer: summed valences squashed to a compound score in (-1, 1).

A deliberately small rule set: lowercase tokens, valence lookup, and sign
flip when a negation token sits in the three tokens before a word. No
boosters, capitalisation or punctuation emphasis.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DataError

ALPHA = 15.0
NEGATION_WINDOW = 3
POSITIVE_THRESHOLD = 0.05
NEGATIVE_THRESHOLD = -0.05

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)


class Polarity(str, enum.Enum):
    POSITIVE = "positive"
    NEUTRAL = "neutral"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class Lexicon:
    valences: dict[str, float]
    negations: frozenset[str] = field(default_factory=frozenset)

    def negated(self) -> Lexicon:
        """Same lexicon with every valence sign-flipped."""
        return Lexicon({k: -v for k, v in self.valences.items()}, self.negations)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def normalize(raw_sum: float, alpha: float = ALPHA) -> float:
    return raw_sum / math.sqrt(raw_sum * raw_sum + alpha)


def score_text(text: str, lexicon: Lexicon) -> float:
    tokens = tokenize(text)
    total = 0.0
    for i, tok in enumerate(tokens):
        valence = lexicon.valences.get(tok)
        if valence is None:
            continue
        window = tokens[max(0, i - NEGATION_WINDOW):i]
        if any(w in lexicon.negations for w in window):
            valence = -valence
        total += valence
    if total == 0.0:
        return 0.0
    return normalize(total)


def classify_polarity(score: float) -> Polarity:
    if score >= POSITIVE_THRESHOLD:
        return Polarity.POSITIVE
    if score <= NEGATIVE_THRESHOLD:
        return Polarity.NEGATIVE
    return Polarity.NEUTRAL


class Scorer:
    """Bound scorer; pure after construction, safe to share between threads."""

    def __init__(self, lexicon: Lexicon):
        self.lexicon = lexicon

    def __call__(self, text: str) -> tuple[float, Polarity]:
        score = score_text(text, self.lexicon)
        return score, classify_polarity(score)


def parse_lexicon(lexicon_text: str, negations_text: str = "", source: str = "lexicon") -> Lexicon:
    valences: dict[str, float] = {}
    for lineno, line in enumerate(lexicon_text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) < 2:
            raise DataError(f"{source}: line {lineno}: expected token<TAB>valence")
        token = parts[0].strip().lower()
        try:
            valence = float(parts[1])
        except ValueError:
            raise DataError(f"{source}: line {lineno}: valence {parts[1]!r} is not a number") from None
        if not math.isfinite(valence):
            raise DataError(f"{source}: line {lineno}: valence must be finite")
        if token in valences:
            raise DataError(f"{source}: line {lineno}: duplicate token {token!r}")
        valences[token] = valence
    negations = frozenset(
        w.strip().lower() for w in negations_text.splitlines() if w.strip() and not w.startswith("#")
    )
    return Lexicon(valences, negations)


def load_lexicon(lexicon_path=None, negations_path=None) -> Lexicon:
    """Load from files; either path left as None falls back to the bundled default."""
    data = resources.files("floodrank") / "data"
    lex_text = (Path(lexicon_path).read_text(encoding="utf-8") if lexicon_path
                else (data / "lexicon.tsv").read_text(encoding="utf-8"))
    neg_text = (Path(negations_path).read_text(encoding="utf-8") if negations_path
                else (data / "negations.txt").read_text(encoding="utf-8"))
    return parse_lexicon(lex_text, neg_text, source=str(lexicon_path or "lexicon.tsv"))
