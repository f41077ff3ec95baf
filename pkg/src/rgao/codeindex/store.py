"""Persistence, on-demand content access and 1-hop neighbourhoods."""

from __future__ import annotations

import json
import os
from pathlib import Path

from rgao.codeindex.model import (
    BuildStats,
    CodeIndexTree,
    CodeNode,
    DependencyEdge,
    EdgeType,
    IndexFormatError,
    NodeKind,
    StaleIndexError,
    VersionMismatchError,
)

FORMAT_VERSION = 1


def tree_to_json(tree: CodeIndexTree) -> dict:
    return {
        "version": FORMAT_VERSION,
        "root": tree.root_id,
        "root_path": tree.root_path,
        "summary_mode": tree.summary_mode,
        "nodes": [_node_json(tree, n) for n in tree.walk()],
        "edges": [e.to_json() for e in tree.edges],
        "stats": tree.stats.to_json(),
    }


def _node_json(tree: CodeIndexTree, node: CodeNode) -> dict:
    out = node.to_json()
    summary = tree.summary(node.id)
    if summary is not None:
        out["summary"] = summary
    return out


def tree_from_json(obj: dict) -> CodeIndexTree:
    if not isinstance(obj, dict) or "version" not in obj:
        raise IndexFormatError("index file has no version field")
    if obj["version"] != FORMAT_VERSION:
        raise VersionMismatchError(f"index format version {obj['version']!r} != supported {FORMAT_VERSION}")
    try:
        nodes = {n["id"]: CodeNode.from_json(n) for n in obj["nodes"]}
        edges = [DependencyEdge.from_json(e) for e in obj["edges"]]
        stats = BuildStats.from_json(obj["stats"])
        if obj.get("root") != CodeIndexTree.root_id:
            raise IndexFormatError(f"unexpected root id {obj.get('root')!r}")
        summaries = {n["id"]: n["summary"] for n in obj["nodes"] if "summary" in n}
        return CodeIndexTree(nodes, edges, stats, root_path=obj.get("root_path", ""),
                             summary_mode=obj.get("summary_mode"), summaries=summaries)
    except (KeyError, TypeError, ValueError) as exc:
        raise IndexFormatError(f"corrupt index file: {exc!r}") from exc


def save_index(tree: CodeIndexTree, path: str | os.PathLike[str]) -> None:
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(json.dumps(tree_to_json(tree), separators=(",", ":")), encoding="utf-8")
    os.replace(tmp, target)


def load_index(path: str | os.PathLike[str]) -> CodeIndexTree:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexFormatError(f"corrupt index file {str(path)!r}: {exc}") from exc
    return tree_from_json(obj)


def fetch_content(tree: CodeIndexTree, node_id: str) -> str:
    """Read a file's text, or a symbol's line span, from disk.

    Raises :class:`StaleIndexError` when the file is gone or its size or
    modification time differ from what was indexed.
    """
    node = tree[node_id]
    if node.kind not in (NodeKind.FILE, NodeKind.SYMBOL):
        raise ValueError(f"{node_id!r} is a {node.kind.value} node; only files and symbols have content")
    file_node = tree.file_of(node_id)
    full = Path(tree.root_path) / file_node.path
    try:
        st = full.stat()
        data = full.read_bytes()
    except FileNotFoundError:
        raise StaleIndexError(f"{file_node.path} no longer exists") from None
    if st.st_size != file_node.size or st.st_mtime_ns != file_node.mtime_ns:
        raise StaleIndexError(f"{file_node.path} changed since it was indexed")
    if node.kind is NodeKind.FILE:
        return data.decode("utf-8", errors="replace")
    lines = data.splitlines(keepends=True)
    return b"".join(lines[node.start_line - 1:node.end_line]).decode("utf-8", errors="replace")


def neighbors_1hop(tree: CodeIndexTree, symbol_id: str, direction: str = "out") -> list[tuple[str, EdgeType]]:
    """Resolved neighbours exactly one edge away, in edge order."""
    node = tree[symbol_id]
    if node.kind is not NodeKind.SYMBOL:
        raise ValueError(f"{symbol_id!r} is not a symbol")
    if direction == "out":
        return list(tree.out_edges(symbol_id))
    if direction == "in":
        return list(tree.in_edges(symbol_id))
    if direction == "both":
        out = list(tree.out_edges(symbol_id))
        seen = set(out)
        out.extend(p for p in tree.in_edges(symbol_id) if p not in seen)
        return out
    raise ValueError(f"direction must be out, in or both, got {direction!r}")
