"""Query routing across retrieval paths, reranking, and 1-hop expansion."""

from __future__ import annotations

from collections.abc import Mapping, Sequence

from rgao.codeindex.model import CodeIndexTree, NodeKind
from rgao.codeindex.store import neighbors_1hop
from rgao.retrieval.classify import classify_query, quoted_phrases, strip_cues
from rgao.retrieval.fusion import rrf_fuse
from rgao.retrieval.lexical import bm25_search, lexical_index, node_text
from rgao.retrieval.scorer import ValueScorer
from rgao.retrieval.search import (
    LatticeParams,
    beam_summary_search,
    lattice_search,
    multi_query_search,
    require_summaries,
    structural_search,
)
from rgao.retrieval.text import informative_terms, tokenize
from rgao.retrieval.types import (
    FULL_MASK,
    QueryType,
    RankedList,
    RetrievalResult,
    RetrievedItem,
    SignalMask,
)

DEFAULT_K = 10
RAW_WEIGHT = 0.5
DOC_BONUS = 0.1
POOL_FACTOR = 3
# Identifier traversal: raw scores of the matched symbol, its members, and its ancestors.
TRAVERSAL_SCORES = (1.0, 0.3, 0.2)
DEPENDENCY_SEEDS = 5


def _doc_overlap(tree: CodeIndexTree, nid: str, terms: frozenset[str]) -> float:
    doc = tree[nid].docstring
    if not doc or not terms:
        return 0.0
    return len(terms & set(tokenize(doc))) / len(terms)


def rerank(tree: CodeIndexTree, candidates: RankedList, query: str, context_file: str | None = None,
           mask: SignalMask = FULL_MASK, scorer: ValueScorer | None = None) -> RankedList:
    """Blend each candidate's normalised path score with its value score and docstring overlap.

    ``score = 0.5 * raw / max_raw + 0.5 * (value + 0.1 * doc_overlap) / 1.1``; equal
    scores keep their input order.
    """
    if not candidates.items:
        return RankedList("rerank", (), candidates.weight)
    scorer = scorer or ValueScorer(tree, query, context_file, mask)
    terms = frozenset(informative_terms(query))
    max_raw = max(s for _, s in candidates.items)
    rescored = []
    for nid, raw in candidates.items:
        norm_raw = raw / max_raw if max_raw > 0 else 0.0
        value = (scorer.score(nid) + DOC_BONUS * _doc_overlap(tree, nid, terms)) / (1.0 + DOC_BONUS)
        rescored.append((nid, RAW_WEIGHT * norm_raw + (1.0 - RAW_WEIGHT) * value))
    rescored.sort(key=lambda p: -p[1])  # stable
    return RankedList("rerank", tuple(rescored), candidates.weight)


def _identifier_candidates(tree: CodeIndexTree, query: str, k: int) -> RankedList:
    lex = lexical_index(tree)
    name = query.strip().strip("`'\"").removesuffix("()")
    matched = list(lex.symbol_names.get(name.rsplit(".", 1)[-1].lower(), ()))
    if "." in name and len(matched) > 1:
        qualified = [m for m in matched if tree[m].id.split("::", 1)[-1].split("@")[0].endswith(name)]
        matched = qualified or matched
    if not matched:
        return bm25_search(tree, query, k * POOL_FACTOR, system="identifier")
    hit, member, ancestor = TRAVERSAL_SCORES
    scores: dict[str, float] = {m: hit for m in matched}
    for m in matched:
        for d in tree.descendants(m):
            scores.setdefault(d.id, member)
        for a in tree.ancestors(m):
            if a.kind in (NodeKind.SYMBOL, NodeKind.FILE):
                scores.setdefault(a.id, ancestor)
    return RankedList.from_scores("identifier", scores, k * POOL_FACTOR)


def _exact_candidates(tree: CodeIndexTree, query: str, k: int) -> RankedList:
    phrases = [p.lower() for p in quoted_phrases(query)] or [query.lower()]
    text_query = " ".join(phrases)
    ranked = bm25_search(tree, text_query, k * POOL_FACTOR, system="exact")
    top = max((s for _, s in ranked.items), default=0.0)
    literal = [nid for nid, n in sorted(tree.nodes.items())
               if n.kind in (NodeKind.SYMBOL, NodeKind.FILE)
               and all(p in node_text(tree, n).lower() for p in phrases)]
    head = [(nid, top + 1.0) for nid in literal]
    seen = set(literal)
    return RankedList("exact", tuple((head + [p for p in ranked.items if p[0] not in seen])[: k * POOL_FACTOR]))


def _dependency_candidates(tree: CodeIndexTree, query: str, k: int) -> RankedList:
    seeds = bm25_search(tree, strip_cues(query) or query, DEPENDENCY_SEEDS, system="dependency")
    scores = dict(seeds.items)
    for nid, s in seeds.items:
        if tree[nid].kind is not NodeKind.SYMBOL:
            continue
        for nb, _etype in neighbors_1hop(tree, nid, "both"):
            scores[nb] = max(scores.get(nb, 0.0), 0.5 * s)
    return RankedList.from_scores("dependency", scores, k * POOL_FACTOR)


def conceptual_paths(tree: CodeIndexTree, query: str, k: int, context_file: str | None = None,
                     mask: SignalMask = FULL_MASK,
                     synonyms: Mapping[str, Sequence[str]] | None = None) -> list[RankedList]:
    require_summaries(tree, "conceptual retrieval")
    pool = k * POOL_FACTOR
    return [
        beam_summary_search(tree, query, k=pool),
        lattice_search(tree, query, LatticeParams(), context_file=context_file, mask=mask, k=pool),
        multi_query_search(tree, query, synonyms, k=pool),
        bm25_search(tree, query, pool),
    ]


def query_coverage(tree: CodeIndexTree, query: str, ids: Sequence[str]) -> float:
    """Share of informative query terms that occur in the text of ``ids``."""
    terms = informative_terms(query)
    if not terms or not ids:
        return 0.0
    lex = lexical_index(tree)
    covered_terms: set[str] = set()
    for nid in ids:
        covered_terms |= lex.token_sets.get(nid, frozenset())
    return sum(t in covered_terms for t in terms) / len(terms)


def ambiguity_score(tree: CodeIndexTree, query: str, ids: Sequence[str]) -> float:
    """``1 - coverage`` of the query by the primary results; 1.0 with no results."""
    if not ids:
        return 1.0
    return min(1.0, max(0.0, 1.0 - query_coverage(tree, query, ids)))


def expand_1hop(tree: CodeIndexTree, primary: Sequence[tuple[str, float]], scorer: ValueScorer,
                limit: int) -> list[tuple[str, float]]:
    """Resolved neighbours of primary symbols, scored below the weakest primary result."""
    if not primary:
        return []
    floor = min(s for _, s in primary)
    taken = {nid for nid, _ in primary}
    best: dict[str, float] = {}
    for nid, _ in primary:
        if tree[nid].kind is not NodeKind.SYMBOL:
            continue
        for nb, _etype in neighbors_1hop(tree, nid, "both"):
            if nb not in taken:
                best[nb] = max(best.get(nb, 0.0), floor * scorer.score(nb))
    return sorted(best.items(), key=lambda p: (-p[1], p[0]))[:limit]


def retrieve(tree: CodeIndexTree, query: str, context_file: str | None = None, k: int = DEFAULT_K, *,
             mask: SignalMask = FULL_MASK, synonyms: Mapping[str, Sequence[str]] | None = None,
             expand: bool = True) -> RetrievalResult:
    """Classify, run the routed path, rerank, then append 1-hop expansions."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qtype, confidence = classify_query(query)
    if not tree.root.children:
        return RetrievalResult(query, qtype, confidence, qtype.value, (), 1.0, {"empty_tree": True})

    diagnostics: dict[str, object] = {}
    if qtype is QueryType.IDENTIFIER:
        candidates = _identifier_candidates(tree, query, k)
    elif qtype is QueryType.EXACT:
        candidates = _exact_candidates(tree, query, k)
    elif qtype is QueryType.DEPENDENCY:
        candidates = _dependency_candidates(tree, query, k)
    elif qtype is QueryType.STRUCTURAL:
        candidates = structural_search(tree, query, k * POOL_FACTOR)
    else:
        paths = conceptual_paths(tree, query, k, context_file, mask, synonyms)
        for p in paths:
            diagnostics[p.system] = p.ids[:k]
        candidates = rrf_fuse(paths, system="conceptual").top(k * POOL_FACTOR)
    diagnostics["candidates"] = len(candidates)

    scorer = ValueScorer(tree, query, context_file, mask)
    primary = list(rerank(tree, candidates, query, context_file, mask, scorer).items[:k])
    expansions = expand_1hop(tree, primary, scorer, k) if expand else []
    items = [RetrievedItem(nid, s, False, scorer(nid).signals) for nid, s in primary]
    items += [RetrievedItem(nid, s, True, scorer(nid).signals) for nid, s in expansions]
    primary_ids = [nid for nid, _ in primary]
    diagnostics["coverage"] = query_coverage(tree, query, primary_ids)
    ambiguity = ambiguity_score(tree, query, primary_ids)
    return RetrievalResult(query, qtype, confidence, qtype.value, tuple(items), ambiguity, diagnostics)
