"""Tree-guided and reformulating search paths."""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from rgao.codeindex.model import ROOT_ID, CodeIndexTree, NodeKind
from rgao.retrieval.fusion import rrf_fuse
from rgao.retrieval.lexical import bm25_search, lexical_index
from rgao.retrieval.scorer import ValueScorer
from rgao.retrieval.text import tokenize
from rgao.retrieval.types import FULL_MASK, EmptyQueryError, NeedsSummariesError, RankedList, SignalMask

MAX_REFORMULATIONS = 4


@dataclass(frozen=True, slots=True)
class LatticeParams:
    alpha: float = 0.6
    beam: int = 4
    max_expansions: int = 32
    max_branch: int = 8

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.beam < 1 or self.max_expansions < 1 or self.max_branch < 1:
            raise ValueError("beam, max_expansions and max_branch must be >= 1")


def calibrate(raw: float, parent_calibrated: float, alpha: float) -> float:
    """Path-smoothed score: ``alpha * raw + (1 - alpha) * parent``."""
    return alpha * raw + (1.0 - alpha) * parent_calibrated


def require_summaries(tree: CodeIndexTree, path: str) -> None:
    if tree.summary_mode is None:
        raise NeedsSummariesError(f"{path} needs a summarised tree; run summarize() first")


def _is_result_node(tree: CodeIndexTree, nid: str) -> bool:
    node = tree[nid]
    return node.kind is NodeKind.SYMBOL or (node.kind is NodeKind.FILE and not node.children)


def lattice_search(tree: CodeIndexTree, query: str, params: LatticeParams = LatticeParams(), *,
                   context_file: str | None = None, mask: SignalMask = FULL_MASK,
                   raw_score: Callable[[str], float] | None = None, k: int | None = None) -> RankedList:
    """Level-wise beam descent with EMA-calibrated value scores.

    ``raw_score`` overrides the value scorer; the default requires summaries.
    Returns every visited symbol (or childless file) ranked by calibrated score.
    """
    if raw_score is None:
        require_summaries(tree, "lattice_search")
        raw_score = ValueScorer(tree, query, context_file, mask).score
    root = tree.root
    if not root.children:
        return RankedList("lattice")
    calibrated = {ROOT_ID: raw_score(ROOT_ID)}
    beam = [ROOT_ID]
    expansions = 0
    visited: dict[str, float] = {}
    while beam and expansions < params.max_expansions:
        frontier: list[tuple[float, str]] = []
        for nid in beam:
            if expansions >= params.max_expansions:
                break
            expansions += 1
            scored = sorted(((raw_score(c), c) for c in tree[nid].children), key=lambda p: (-p[0], p[1]))
            for raw, cid in scored[: params.max_branch]:
                cal = calibrate(raw, calibrated[nid], params.alpha)
                calibrated[cid] = cal
                if _is_result_node(tree, cid):
                    visited[cid] = cal
                if tree[cid].children:
                    frontier.append((cal, cid))
        frontier.sort(key=lambda p: (-p[0], p[1]))
        beam = [cid for _, cid in frontier[: params.beam]]
    return RankedList.from_scores("lattice", visited, k)


def overlap_score(query_terms: frozenset[str], text_terms: frozenset[str]) -> float:
    if not query_terms:
        return 0.0
    return len(query_terms & text_terms) / len(query_terms)


def beam_summary_search(tree: CodeIndexTree, query: str, beam: int = 4, k: int | None = None) -> RankedList:
    """Beam descent guided by the fraction of query terms present in each node's summary."""
    require_summaries(tree, "beam_summary_search")
    if beam < 1:
        raise ValueError("beam must be >= 1")
    terms = frozenset(tokenize(query))
    summary_terms: dict[str, frozenset[str]] = {}

    def score(nid: str) -> float:
        if nid not in summary_terms:
            summary_terms[nid] = frozenset(tokenize(tree.summary(nid) or ""))
        return overlap_score(terms, summary_terms[nid])

    level = [ROOT_ID]
    found: dict[str, float] = {}
    while level:
        candidates = sorted(((score(c), c) for nid in level for c in tree[nid].children),
                            key=lambda p: (-p[0], p[1]))
        kept = candidates[:beam]
        for s, cid in kept:
            if tree[cid].kind is NodeKind.SYMBOL:
                found[cid] = s
        # Symbols are leaves of interest; their members only matter via the parent.
        level = [cid for _, cid in kept if tree[cid].children]
    return RankedList.from_scores("beam_summary", found, k)


@lru_cache(maxsize=1)
def default_synonyms() -> Mapping[str, tuple[str, ...]]:
    raw = json.loads(resources.files("rgao.data").joinpath("synonyms.json").read_text(encoding="utf-8"))
    return {k: tuple(v) for k, v in raw["entries"].items()}


def _bidirectional(synonyms: Mapping[str, Sequence[str]]) -> dict[str, list[str]]:
    table: dict[str, list[str]] = {}
    for head, alts in synonyms.items():
        for w in alts:
            table.setdefault(head.lower(), []).append(w.lower())
            table.setdefault(w.lower(), []).append(head.lower())
    return {k: list(dict.fromkeys(v)) for k, v in table.items()}


def reformulations(query: str, synonyms: Mapping[str, Sequence[str]] | None = None,
                   limit: int = MAX_REFORMULATIONS) -> list[str]:
    """The original query followed by single-word synonym substitutions, ``limit`` in total."""
    table = _bidirectional(default_synonyms() if synonyms is None else synonyms)
    words = query.split()
    out = [query]
    for i, word in enumerate(words):
        for alt in table.get(word.lower(), ()):
            variant = " ".join(words[:i] + [alt] + words[i + 1:])
            if variant not in out:
                out.append(variant)
            if len(out) >= limit:
                return out
    return out


def multi_query_search(tree: CodeIndexTree, query: str, synonyms: Mapping[str, Sequence[str]] | None = None,
                       k: int = 10) -> RankedList:
    """RRF over BM25 runs of the query and its synonym reformulations."""
    if not query.strip():
        raise EmptyQueryError("query must be non-empty")
    queries = reformulations(query, synonyms)
    if len(queries) == 1:
        return bm25_search(tree, query, k)
    fused = rrf_fuse([bm25_search(tree, q, k) for q in queries], system="multi_query")
    return fused.top(k)


def structural_search(tree: CodeIndexTree, query: str, k: int = 10) -> RankedList:
    """Coarse-to-fine ranking of directory and file nodes by query-term overlap with their path and summary."""
    lex = lexical_index(tree)
    terms = frozenset(tokenize(query))
    scores: dict[str, float] = {}
    for node in tree.walk():
        if node.kind not in (NodeKind.DIRECTORY, NodeKind.FILE):
            continue
        overlap = overlap_score(terms, lex.token_sets[node.id])
        # Coarser nodes win ties: a directory outranks the files inside it.
        scores[node.id] = overlap + 0.01 / (1 + node.depth)
    return RankedList.from_scores("structural", scores, k)
