"""Tokenisation shared by the lexical scorers."""

from __future__ import annotations

import re
from functools import lru_cache

import snowballstemmer

_WORD = re.compile(r"[A-Za-z0-9_]+")
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")

STOPWORDS = frozenset("""
a an and are as at be by do does for from how i in into is it its me my of on or our should so that the
their them then there these this those to us was we what when where which who why will with you your can
all any each every everywhere across other again also just
""".split())

# Task-phrasing verbs that say nothing about where in the code to look.
GENERIC_TASK_WORDS = frozenset("""
add change fix update make implement improve refactor handle work works working support use using
need needs want please help new code function functions file files module modules thing things stuff
something somehow better issue issues problem bug bugs correct properly way ways part parts test tests
""".split())


_STEMMER = snowballstemmer.stemmer("english")


@lru_cache(maxsize=65536)
def stem(word: str) -> str:
    return _STEMMER.stemWord(word)


STOPWORDS = frozenset(stem(w) for w in STOPWORDS) | STOPWORDS
GENERIC_TASK_WORDS = frozenset(stem(w) for w in GENERIC_TASK_WORDS) | GENERIC_TASK_WORDS


def split_identifier(token: str) -> list[str]:
    """Subword pieces of one identifier: snake_case and camelCase aware, lowercased."""
    parts: list[str] = []
    for chunk in token.split("_"):
        if chunk:
            parts.extend(m.group(0).lower() for m in _CAMEL.finditer(chunk))
    return parts


@lru_cache(maxsize=65536)
def _word_tokens(raw: str) -> tuple[str, ...]:
    pieces = split_identifier(raw)
    whole = raw.lower().strip("_")
    head = (whole,) if whole and (len(pieces) != 1 or pieces[0] != whole) else ()
    return head + tuple(stem(p) for p in pieces)


def tokenize(text: str) -> list[str]:
    """Lowercased tokens: each compound identifier plus its stemmed subword pieces."""
    out: list[str] = []
    for raw in _WORD.findall(text):
        out.extend(_word_tokens(raw))
    return out


def informative_terms(text: str) -> list[str]:
    """Distinct query terms after dropping stopwords and generic task words, in order."""
    seen: dict[str, None] = {}
    for tok in tokenize(text):
        if len(tok) < 2 or tok in STOPWORDS or tok in GENERIC_TASK_WORDS:
            continue
        seen.setdefault(tok, None)
    return list(seen)
