"""Bottom-up node summaries built from index metadata only."""

from __future__ import annotations

from collections import Counter
from enum import Enum

from rgao.codeindex.model import CodeIndexTree, CodeNode, EdgeType, NodeKind

IMPORT_PREVIEW = 5
DOCSTRING_CHARS = 200
CHILD_PREVIEW = 8
_EDGE_ORDER = (EdgeType.CALLS, EdgeType.IMPORTS, EdgeType.INHERITS)


class SummaryMode(str, Enum):
    DETERMINISTIC = "deterministic"
    SEMANTIC = "semantic"


def edge_summary(counts: Counter) -> str:
    """Format typed edge counts as ``calls(3), imports(2)``; zero counts are omitted."""
    return ", ".join(f"{t.value}({counts[t]})" for t in _EDGE_ORDER if counts[t])


def _imports_text(imports: tuple[str, ...], limit: int | None) -> str:
    if limit is None or len(imports) <= limit:
        return ", ".join(imports)
    return ", ".join(imports[:limit]) + f", ... (+{len(imports) - limit} more)"


def _first_line(text: str | None) -> str:
    if not text:
        return ""
    for line in text.splitlines():
        if line.strip():
            return line.strip()
    return ""


def _preview(names: list[str]) -> str:
    if len(names) <= CHILD_PREVIEW:
        return ", ".join(names)
    return ", ".join(names[:CHILD_PREVIEW]) + f", ... (+{len(names) - CHILD_PREVIEW} more)"


def summarize(tree: CodeIndexTree, mode: SummaryMode | str = SummaryMode.DETERMINISTIC) -> CodeIndexTree:
    """Return a copy of ``tree`` with a summary on every node.

    Deterministic: symbol type, name, location, first docstring line, and
    file import lists truncated to five.  Semantic: docstrings up to 200
    characters, typed edge counts, and complete import lists.
    """
    mode = SummaryMode(mode)
    semantic = mode is SummaryMode.SEMANTIC
    edge_counts: dict[str, Counter] = {}
    if semantic:
        for e in tree.edges:
            edge_counts.setdefault(e.source, Counter())[e.edge_type] += 1

    nodes = tree.nodes
    summaries: dict[str, str] = {}
    # Aggregates carried upward: (file count, symbol count, edge counter).
    totals: dict[str, tuple[int, int, Counter | None]] = {}
    order = list(tree.walk())
    for node in reversed(order):  # children before parents
        files, symbols = 0, 0
        counter = Counter() if semantic else None
        for cid in node.children:
            f, s, c = totals[cid]
            files += f
            symbols += s
            if c:
                counter.update(c)
        if node.kind is NodeKind.SYMBOL:
            symbols += 1
            own = edge_counts.get(node.id)
            if own:
                counter.update(own)
            summaries[node.id] = _symbol_summary(node, semantic, own)
        elif node.kind is NodeKind.FILE:
            files += 1
            summaries[node.id] = _file_summary(node, nodes, symbols, semantic, counter)
        else:
            summaries[node.id] = _container_summary(node, nodes, files, symbols, semantic, counter)
        totals[node.id] = (files, symbols, counter)

    return tree.with_summaries(mode.value, summaries)


def _symbol_summary(node: CodeNode, semantic: bool, counts: Counter | None) -> str:
    parts = [f"{node.symbol_type} {node.name} at {node.location}"]
    if semantic:
        if node.signature:
            parts.append(node.signature)
        if node.docstring:
            parts.append(node.docstring.strip()[:DOCSTRING_CHARS])
        if counts:
            parts.append(edge_summary(counts))
    else:
        first = _first_line(node.docstring)
        if first:
            parts.append(first)
    return "; ".join(parts)


def _file_summary(node: CodeNode, nodes, symbols: int, semantic: bool, counter: Counter) -> str:
    names = [nodes[c].name for c in node.children if nodes[c].symbol_type != "import"]
    parts = [f"file {node.path} ({node.language}, {node.line_count} lines, {symbols} symbols)"]
    if names:
        parts.append("defines " + (", ".join(names) if semantic else _preview(names)))
    if node.imports:
        parts.append("imports " + _imports_text(node.imports, None if semantic else IMPORT_PREVIEW))
    if semantic and counter:
        parts.append(edge_summary(counter))
    return "; ".join(parts)


def _container_summary(node: CodeNode, nodes, files: int, symbols: int, semantic: bool,
                       counter: Counter) -> str:
    label = "repository" if node.kind is NodeKind.ROOT else f"directory {node.path}"
    parts = [f"{label} ({files} files, {symbols} symbols)"]
    names = [nodes[c].name for c in node.children]
    if names:
        parts.append("contains " + _preview(names))
    if semantic and counter:
        parts.append(edge_summary(counter))
    return "; ".join(parts)
