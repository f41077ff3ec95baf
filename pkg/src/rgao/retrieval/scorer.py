"""Seven-signal value scorer."""

from __future__ import annotations

import math
import posixpath
from collections.abc import Mapping
from dataclasses import dataclass

from rgao.codeindex.analyzer import SUPPORTED_LANGUAGES
from rgao.codeindex.model import CodeIndexTree, NodeKind
from rgao.retrieval.lexical import LexicalIndex, lexical_index, node_directory
from rgao.retrieval.types import FEATURE_NAMES, FULL_MASK, SignalMask

TYPE_PRIORITY: Mapping[str, float] = {
    "function": 6 / 6, "method": 5 / 6, "class": 4 / 6, "variable": 3 / 6, "import": 2 / 6, "block": 1 / 6,
}
LANG_SUPPORTED = 1.0
LANG_OTHER = 0.5
LENGTH_SCALE = 2000
CTX_SAME_FILE = 1.0
CTX_SAME_DIR = 2 / 3
CTX_PARENT_DIR = 1 / 3


@dataclass(frozen=True, slots=True)
class ValueScore:
    score: float
    signals: Mapping[str, float]


class ValueScorer:
    """Scores nodes of one tree against one query; reuse it across nodes."""

    def __init__(self, tree: CodeIndexTree, query: str, context_file: str | None = None,
                 mask: SignalMask = FULL_MASK) -> None:
        self.tree = tree
        self.mask = mask
        self.lex: LexicalIndex = lexical_index(tree)
        self.enabled = mask.enabled
        self.context_file = context_file.replace("\\", "/").lstrip("./") if context_file else None
        self._ctx_dir = posixpath.dirname(self.context_file) if self.context_file else None
        self._ctx_parent = posixpath.dirname(self._ctx_dir) if self._ctx_dir else None
        self._qvec, self._qnorm = self.lex.query_vector(query) if "tfidf" in self.enabled else ({}, 0.0)
        self._log_max_deg = math.log1p(self.lex.max_degree)

    def signal(self, name: str, node_id: str) -> float:
        node = self.tree[node_id]
        if name == "tfidf":
            dnorm = self.lex.tfidf_norms.get(node_id, 0.0)
            if not self._qnorm or not dnorm:
                return 0.0
            vec = self.lex.tfidf_vectors[node_id]
            dot = sum(w * vec.get(t, 0.0) for t, w in self._qvec.items())
            return min(1.0, dot / (self._qnorm * dnorm))
        if name == "lang":
            return LANG_SUPPORTED if node.language in SUPPORTED_LANGUAGES else LANG_OTHER
        if name == "type":
            return TYPE_PRIORITY.get(node.symbol_type, 0.0) if node.kind is NodeKind.SYMBOL else 0.0
        if name == "ctx":
            if self.context_file is None:
                return 0.0
            if node.kind in (NodeKind.FILE, NodeKind.SYMBOL) and node.path == self.context_file:
                return CTX_SAME_FILE
            ndir = node_directory(node)
            if ndir == self._ctx_dir:
                return CTX_SAME_DIR
            if self._ctx_dir and ndir == self._ctx_parent:
                return CTX_PARENT_DIR
            return 0.0
        if name == "hub":
            if self._log_max_deg == 0.0:
                return 0.0
            return min(1.0, math.log1p(self.lex.degree.get(node_id, 0)) / self._log_max_deg)
        if name == "len":
            return min(1.0, self.lex.content_length.get(node_id, 0) / LENGTH_SCALE)
        if name == "pr":
            return self.lex.pagerank.get(node_id, 0.0)
        raise ValueError(f"unknown signal {name!r}")

    def __call__(self, node_id: str) -> ValueScore:
        signals = {name: self.signal(name, node_id) for name in self.enabled}
        return ValueScore(sum(signals.values()) / len(signals), signals)

    def score(self, node_id: str) -> float:
        return self(node_id).score


def value_score(tree: CodeIndexTree, node_id: str, query: str, context_file: str | None = None,
                mask: SignalMask = FULL_MASK) -> ValueScore:
    """Mean of the enabled signals for one node; each signal lies in [0, 1]."""
    return ValueScorer(tree, query, context_file, mask)(node_id)


__all__ = ["FEATURE_NAMES", "TYPE_PRIORITY", "ValueScore", "ValueScorer", "value_score"]
