"""Query classification, lexical and tree-guided search paths, fusion and reranking."""

from rgao.retrieval.ablation import AblationRow, ablation_masks, format_ablation_table, ndcg_at_k, reciprocal_rank, run_ablation
from rgao.retrieval.classify import classify_query
from rgao.retrieval.fusion import RRF_K, rrf_fuse
from rgao.retrieval.lexical import bm25_search
from rgao.retrieval.pipeline import ambiguity_score, expand_1hop, query_coverage, rerank, retrieve
from rgao.retrieval.scorer import ValueScore, ValueScorer, value_score
from rgao.retrieval.search import (
    LatticeParams,
    beam_summary_search,
    calibrate,
    default_synonyms,
    lattice_search,
    multi_query_search,
    reformulations,
    structural_search,
)
from rgao.retrieval.types import (
    FEATURE_NAMES,
    FULL_MASK,
    EmptyQueryError,
    NeedsSummariesError,
    QueryType,
    RankedList,
    RetrievalError,
    RetrievalResult,
    RetrievedItem,
    SignalMask,
)

__all__ = [
    "AblationRow", "ablation_masks", "format_ablation_table", "ndcg_at_k", "reciprocal_rank", "run_ablation",
    "classify_query", "RRF_K", "rrf_fuse", "bm25_search", "ambiguity_score", "expand_1hop",
    "query_coverage", "rerank", "retrieve", "ValueScore", "ValueScorer", "value_score",
    "LatticeParams", "beam_summary_search", "calibrate", "default_synonyms", "lattice_search",
    "multi_query_search", "reformulations", "structural_search", "FEATURE_NAMES", "FULL_MASK",
    "EmptyQueryError", "NeedsSummariesError", "QueryType", "RankedList", "RetrievalError",
    "RetrievalResult", "RetrievedItem", "SignalMask",
]
