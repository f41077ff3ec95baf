"""Per-tree lexical statistics: BM25 postings, TF-IDF vectors and graph priors.

Derived once per tree object and cached; trees are immutable so the cache
never goes stale.
"""

from __future__ import annotations

import math
import posixpath
import threading
import weakref
from collections import Counter
from dataclasses import dataclass

from rgao.codeindex.model import CodeIndexTree, CodeNode, NodeKind
from rgao.retrieval.classify import is_code_shaped
from rgao.retrieval.text import STOPWORDS, tokenize
from rgao.retrieval.types import RankedList

BM25_K1 = 1.2
BM25_B = 0.75
PAGERANK_ITERATIONS = 20
PAGERANK_DAMPING = 0.85


def node_text(tree: CodeIndexTree, node: CodeNode) -> str:
    parts = [node.name]
    if node.kind is not NodeKind.SYMBOL:
        parts.append(node.path)
    if node.signature:
        parts.append(node.signature)
    if node.docstring:
        parts.append(node.docstring)
    summary = tree.summary(node.id)
    if summary:
        parts.append(summary)
    return " ".join(parts)


def _pagerank(symbol_ids: list[str], tree: CodeIndexTree) -> dict[str, float]:
    n = len(symbol_ids)
    if n == 0:
        return {}
    out_links = {sid: [t for t, _ in tree.out_edges(sid)] for sid in symbol_ids}
    rank = dict.fromkeys(symbol_ids, 1.0 / n)
    base = (1.0 - PAGERANK_DAMPING) / n
    for _ in range(PAGERANK_ITERATIONS):
        dangling = sum(rank[s] for s in symbol_ids if not out_links[s])
        nxt = dict.fromkeys(symbol_ids, base + PAGERANK_DAMPING * dangling / n)
        for s in symbol_ids:
            targets = out_links[s]
            if targets:
                share = PAGERANK_DAMPING * rank[s] / len(targets)
                for t in targets:
                    nxt[t] += share
        rank = nxt
    lo, hi = min(rank.values()), max(rank.values())
    if hi - lo <= 1e-15:
        return dict.fromkeys(symbol_ids, 0.0)
    return {s: (v - lo) / (hi - lo) for s, v in rank.items()}


@dataclass
class LexicalIndex:
    # BM25 corpus: symbol and file nodes
    doc_ids: list[str]
    doc_tf: list[Counter]
    doc_len: list[int]
    avgdl: float
    postings: dict[str, list[int]]
    symbol_names: dict[str, list[str]]
    # TF-IDF over every node
    token_sets: dict[str, frozenset[str]]
    tfidf_vectors: dict[str, dict[str, float]]
    tfidf_norms: dict[str, float]
    tfidf_df: Counter
    tfidf_n: int
    # graph and size priors, already normalised to [0, 1] except raw degree/length
    degree: dict[str, int]
    max_degree: int
    pagerank: dict[str, float]
    content_length: dict[str, int]

    # -- BM25 ------------------------------------------------------------

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        n = len(self.doc_ids)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def bm25_scores(self, terms: list[str]) -> dict[int, float]:
        scores: dict[int, float] = {}
        for term in dict.fromkeys(terms):
            posting = self.postings.get(term)
            if not posting:
                continue
            idf = self.idf(term)
            for d in posting:
                tf = self.doc_tf[d][term]
                norm = BM25_K1 * (1.0 - BM25_B + BM25_B * self.doc_len[d] / self.avgdl)
                scores[d] = scores.get(d, 0.0) + idf * tf * (BM25_K1 + 1.0) / (tf + norm)
        return scores

    # -- TF-IDF ----------------------------------------------------------

    def tfidf_idf(self, term: str) -> float:
        return math.log((1.0 + self.tfidf_n) / (1.0 + self.tfidf_df.get(term, 0))) + 1.0

    def query_vector(self, query: str) -> tuple[dict[str, float], float]:
        counts = Counter(t for t in tokenize(query) if t not in STOPWORDS)
        vec = {t: c * self.tfidf_idf(t) for t, c in counts.items()}
        return vec, math.sqrt(sum(v * v for v in vec.values()))


_CACHE: weakref.WeakKeyDictionary[CodeIndexTree, LexicalIndex] = weakref.WeakKeyDictionary()
_LOCK = threading.Lock()


def lexical_index(tree: CodeIndexTree) -> LexicalIndex:
    with _LOCK:
        cached = _CACHE.get(tree)
        if cached is None:
            cached = _build(tree)
            _CACHE[tree] = cached
        return cached


def _build(tree: CodeIndexTree) -> LexicalIndex:
    nodes = tree.nodes
    counts: dict[str, Counter] = {nid: Counter(tokenize(node_text(tree, n))) for nid, n in nodes.items()}

    doc_ids = sorted(nid for nid, n in nodes.items() if n.kind in (NodeKind.SYMBOL, NodeKind.FILE))
    doc_tf = [counts[nid] for nid in doc_ids]
    doc_len = [sum(c.values()) for c in doc_tf]
    avgdl = (sum(doc_len) / len(doc_len)) if doc_len else 1.0
    postings: dict[str, list[int]] = {}
    for i, tf in enumerate(doc_tf):
        for term in tf:
            postings.setdefault(term, []).append(i)

    symbol_names: dict[str, list[str]] = {}
    for nid, n in nodes.items():
        if n.kind is NodeKind.SYMBOL:
            symbol_names.setdefault(n.name.lower(), []).append(nid)
    for ids in symbol_names.values():
        ids.sort()

    df: Counter = Counter()
    for c in counts.values():
        df.update(c.keys())
    n_all = len(nodes)
    idf = {t: math.log((1.0 + n_all) / (1.0 + d)) + 1.0 for t, d in df.items()}
    vectors = {nid: {t: tf * idf[t] for t, tf in c.items() if t not in STOPWORDS} for nid, c in counts.items()}
    norms = {nid: math.sqrt(sum(v * v for v in vec.values())) for nid, vec in vectors.items()}
    token_sets = {nid: frozenset(c) for nid, c in counts.items()}

    degree: dict[str, int] = {}
    symbol_ids = sorted(nid for nid, n in nodes.items() if n.kind is NodeKind.SYMBOL)
    for sid in symbol_ids:
        degree[sid] = len(tree.out_edges(sid)) + len(tree.in_edges(sid))
    pagerank = _pagerank(symbol_ids, tree)
    content_length: dict[str, int] = {}
    # Post-order: containers take the max of their descendants for graph priors.
    for node in reversed(list(tree.walk())):
        if node.kind is NodeKind.SYMBOL and not node.children:
            content_length[node.id] = node.length
            continue
        kids = node.children
        if node.kind is not NodeKind.SYMBOL:
            degree[node.id] = max((degree[c] for c in kids), default=0)
            pagerank[node.id] = max((pagerank[c] for c in kids), default=0.0)
        else:
            degree[node.id] = max([degree[node.id], *(degree[c] for c in kids)])
            pagerank[node.id] = max([pagerank[node.id], *(pagerank[c] for c in kids)])
        if node.kind in (NodeKind.SYMBOL, NodeKind.FILE):
            content_length[node.id] = node.length
        else:
            content_length[node.id] = sum(content_length[c] for c in kids)
    max_degree = max((degree[s] for s in symbol_ids), default=0)

    return LexicalIndex(
        doc_ids=doc_ids, doc_tf=doc_tf, doc_len=doc_len, avgdl=avgdl or 1.0,
        postings=postings, symbol_names=symbol_names, token_sets=token_sets,
        tfidf_vectors=vectors, tfidf_norms=norms, tfidf_df=df, tfidf_n=n_all, degree=degree,
        max_degree=max_degree, pagerank=pagerank, content_length=content_length,
    )


def _forced_names(query: str) -> list[str]:
    raw = query.strip()
    tokens = raw.split()
    if len(tokens) == 1:
        return [tokens[0].strip("`'\"").removesuffix("()").lower()]
    return [t.removesuffix("()").lower() for t in tokens if is_code_shaped(t)]


def bm25_search(tree: CodeIndexTree, query: str, k: int = 10, *, system: str = "bm25") -> RankedList:
    """BM25 over node names, signatures, docstrings and summaries.

    Symbols whose name equals the query (or a code-shaped query token) are
    placed first regardless of their BM25 score.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lex = lexical_index(tree)
    if not lex.doc_ids:
        return RankedList(system)
    scores = {lex.doc_ids[d]: s for d, s in lex.bm25_scores(tokenize(query)).items()}
    forced: list[str] = []
    for name in _forced_names(query):
        last = name.rsplit(".", 1)[-1]
        for nid in lex.symbol_names.get(last, ()):
            if nid not in forced:
                forced.append(nid)
    top = max(scores.values(), default=0.0)
    ranked = RankedList.from_scores(system, scores)
    head = [(nid, top + 1.0) for nid in forced]
    forced_set = set(forced)
    rest = [(nid, s) for nid, s in ranked.items if nid not in forced_set]
    return RankedList(system, tuple((head + rest)[:k]))


def node_directory(node: CodeNode) -> str:
    return node.path if node.kind in (NodeKind.ROOT, NodeKind.DIRECTORY) else posixpath.dirname(node.path)
