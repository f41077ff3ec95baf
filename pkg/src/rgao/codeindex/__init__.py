"""Hierarchical repository index: tree model, builder, summaries, persistence."""

from rgao.codeindex.build import IndexConfig, build_index
from rgao.codeindex.model import (
    ROOT_ID,
    SYMBOL_TYPES,
    BuildStats,
    CodeIndexError,
    CodeIndexTree,
    CodeNode,
    DependencyEdge,
    EdgeType,
    IndexFormatError,
    NodeKind,
    StaleIndexError,
    UnknownNodeError,
    VersionMismatchError,
)
from rgao.codeindex.store import FORMAT_VERSION, fetch_content, load_index, neighbors_1hop, save_index
from rgao.codeindex.summarize import SummaryMode, edge_summary, summarize
from rgao.codeindex.synthetic import PRESETS, generate_preset, generate_repo

__all__ = [
    "ROOT_ID", "SYMBOL_TYPES", "BuildStats", "CodeIndexError", "CodeIndexTree", "CodeNode",
    "DependencyEdge", "EdgeType", "IndexFormatError", "NodeKind", "StaleIndexError",
    "UnknownNodeError", "VersionMismatchError", "IndexConfig", "build_index", "FORMAT_VERSION",
    "fetch_content", "load_index", "neighbors_1hop", "save_index", "SummaryMode", "edge_summary",
    "summarize", "PRESETS", "generate_preset", "generate_repo",
]
