"""Rule-cascade query classifier."""

from __future__ import annotations

import re

from rgao.retrieval.types import EmptyQueryError, QueryType

CONFIDENCE = {
    "quoted": 0.95,
    "identifier": 0.9,
    "cue": 0.8,
    "fallthrough": 0.6,
}

_QUOTED = re.compile(r'"[^"]+"|`[^`]+`|“[^”]+”')
_SINGLE_QUOTED = re.compile(r"^'[^']+'$")
_CODE_TOKEN = re.compile(r"^[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*(?:\(\))?$")
DEPENDENCY_CUES = ("imports", "import of", "calls", "called by", "callers of", "depends on",
                   "dependencies of", "dependents of", "who uses", "usages of")
STRUCTURAL_CUES = ("directory", "directories", "layout", "structure", "module tree", "folder",
                   "hierarchy", "package tree")


def is_code_shaped(token: str) -> bool:
    """camelCase, PascalCase with two humps, snake_case or dotted identifiers."""
    if not _CODE_TOKEN.match(token):
        return False
    core = token.removesuffix("()")
    return ("_" in core.strip("_") or "." in core or re.search(r"[a-z0-9][A-Z]", core) is not None
            or (core.startswith("__") and core.endswith("__")))


def _has_cue(lowered: str, cues: tuple[str, ...]) -> bool:
    return any(re.search(rf"(?<![\w]){re.escape(c)}(?![\w])", lowered) for c in cues)


def classify_query(query: str) -> tuple[QueryType, float]:
    """Classify ``query`` into one of the five query types with a rule-level confidence."""
    text = query.strip()
    if not text:
        raise EmptyQueryError("query must be non-empty")
    if _QUOTED.search(text) or _SINGLE_QUOTED.match(text):
        return QueryType.EXACT, CONFIDENCE["quoted"]
    if " " not in text and is_code_shaped(text):
        return QueryType.IDENTIFIER, CONFIDENCE["identifier"]
    lowered = text.lower()
    if _has_cue(lowered, DEPENDENCY_CUES):
        return QueryType.DEPENDENCY, CONFIDENCE["cue"]
    if _has_cue(lowered, STRUCTURAL_CUES):
        return QueryType.STRUCTURAL, CONFIDENCE["cue"]
    return QueryType.CONCEPTUAL, CONFIDENCE["fallthrough"]


def quoted_phrases(query: str) -> list[str]:
    phrases = [m.group(0)[1:-1] for m in _QUOTED.finditer(query)]
    if not phrases and _SINGLE_QUOTED.match(query.strip()):
        phrases = [query.strip()[1:-1]]
    return phrases


def strip_cues(query: str) -> str:
    """The query with dependency/structure cue phrases removed."""
    out = query
    for cue in DEPENDENCY_CUES + STRUCTURAL_CUES:
        out = re.sub(rf"(?i)(?<![\w]){re.escape(cue)}(?![\w])", " ", out)
    return " ".join(out.split())
