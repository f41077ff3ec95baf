"""Tree model for the hierarchical repository index."""

from __future__ import annotations

import copy
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Any, NamedTuple

ROOT_ID = "."


class NodeKind(str, Enum):
    ROOT = "root"
    DIRECTORY = "directory"
    FILE = "file"
    SYMBOL = "symbol"


class EdgeType(str, Enum):
    CALLS = "calls"
    IMPORTS = "imports"
    INHERITS = "inherits"


SYMBOL_TYPES = ("function", "method", "class", "variable", "import", "block")

# Allowed child kinds per parent kind.
_CHILD_KINDS = {
    NodeKind.ROOT: {NodeKind.DIRECTORY, NodeKind.FILE},
    NodeKind.DIRECTORY: {NodeKind.DIRECTORY, NodeKind.FILE},
    NodeKind.FILE: {NodeKind.SYMBOL},
    NodeKind.SYMBOL: {NodeKind.SYMBOL},
}


class CodeIndexError(Exception):
    """Base class for index errors."""


class StaleIndexError(CodeIndexError):
    pass


class IndexFormatError(CodeIndexError):
    pass


class VersionMismatchError(IndexFormatError):
    pass


class UnknownNodeError(CodeIndexError, KeyError):
    pass


class CodeNode(NamedTuple):
    """One tree node.  A tuple so that building large trees stays cheap."""

    id: str
    kind: NodeKind
    name: str
    path: str
    parent: str | None = None
    depth: int = 0
    children: tuple[str, ...] = ()
    language: str | None = None
    symbol_type: str | None = None
    signature: str = ""
    docstring: str | None = None
    start_line: int | None = None
    end_line: int | None = None
    # file metadata, used for stale detection and length features
    size: int | None = None
    mtime_ns: int | None = None
    length: int = 0
    line_count: int = 0
    imports: tuple[str, ...] = ()

    @property
    def is_symbol(self) -> bool:
        return self.kind is NodeKind.SYMBOL

    @property
    def location(self) -> str:
        if self.start_line is None:
            return self.path
        return f"{self.path}:{self.start_line}-{self.end_line}"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "kind": self.kind.value, "name": self.name, "path": self.path}
        for key in ("parent", "language", "symbol_type", "docstring", "start_line", "end_line",
                    "size", "mtime_ns"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        out["depth"] = self.depth
        out["children"] = list(self.children)
        if self.signature:
            out["signature"] = self.signature
        out["length"] = self.length
        out["line_count"] = self.line_count
        if self.imports:
            out["imports"] = list(self.imports)
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> CodeNode:
        return cls(
            id=obj["id"], kind=NodeKind(obj["kind"]), name=obj["name"], path=obj["path"],
            parent=obj.get("parent"), depth=int(obj.get("depth", 0)),
            children=tuple(obj.get("children", ())), language=obj.get("language"),
            symbol_type=obj.get("symbol_type"), signature=obj.get("signature", ""),
            docstring=obj.get("docstring"), start_line=obj.get("start_line"),
            end_line=obj.get("end_line"), size=obj.get("size"),
            mtime_ns=obj.get("mtime_ns"), length=int(obj.get("length", 0)),
            line_count=int(obj.get("line_count", 0)), imports=tuple(obj.get("imports", ())),
        )


@dataclass(frozen=True, slots=True)
class DependencyEdge:
    source: str
    target: str  # symbol id, or the raw name when unresolved
    edge_type: EdgeType
    resolved: bool

    def to_json(self) -> dict[str, Any]:
        return {"from": self.source, "to": self.target, "type": self.edge_type.value,
                "resolved": self.resolved}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> DependencyEdge:
        return cls(obj["from"], obj["to"], EdgeType(obj["type"]), bool(obj["resolved"]))


@dataclass(frozen=True)
class BuildStats:
    file_count: int = 0
    directory_count: int = 0
    symbol_count: int = 0
    node_count: int = 1
    edge_count: int = 0
    unresolved_edge_count: int = 0
    build_seconds: float = 0.0
    max_depth: int = 10
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "file_count": self.file_count, "directory_count": self.directory_count,
            "symbol_count": self.symbol_count, "node_count": self.node_count,
            "edge_count": self.edge_count, "unresolved_edge_count": self.unresolved_edge_count,
            "build_seconds": self.build_seconds, "max_depth": self.max_depth,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> BuildStats:
        return cls(**{**obj, "warnings": tuple(obj.get("warnings", ()))})


class CodeIndexTree:
    """Immutable Root→Directory→File→Symbol tree plus typed dependency edges."""

    def __init__(self, nodes: Mapping[str, CodeNode], edges: list[DependencyEdge] | tuple[DependencyEdge, ...],
                 stats: BuildStats, root_path: str = "", summary_mode: str | None = None,
                 summaries: Mapping[str, str] | None = None) -> None:
        if ROOT_ID not in nodes:
            raise IndexFormatError("tree has no root node")
        self._nodes = MappingProxyType(dict(nodes))
        self.edges: tuple[DependencyEdge, ...] = tuple(edges)
        self.stats = stats
        self.root_path = root_path
        self.summary_mode = summary_mode
        self.summaries: Mapping[str, str] = MappingProxyType(dict(summaries or {}))
        out_adj: dict[str, list[tuple[str, EdgeType]]] = {}
        in_adj: dict[str, list[tuple[str, EdgeType]]] = {}
        for e in self.edges:
            if e.resolved:
                out_adj.setdefault(e.source, []).append((e.target, e.edge_type))
                in_adj.setdefault(e.target, []).append((e.source, e.edge_type))
        self._out = {k: tuple(v) for k, v in out_adj.items()}
        self._in = {k: tuple(v) for k, v in in_adj.items()}

    root_id = ROOT_ID

    @property
    def nodes(self) -> Mapping[str, CodeNode]:
        return self._nodes

    @property
    def root(self) -> CodeNode:
        return self._nodes[ROOT_ID]

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def __getitem__(self, node_id: str) -> CodeNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNodeError(node_id) from None

    def with_summaries(self, mode: str, summaries: Mapping[str, str]) -> CodeIndexTree:
        """Copy sharing nodes, edges and adjacency, with a new summary layer."""
        clone = copy.copy(self)
        clone.summary_mode = mode
        clone.summaries = MappingProxyType(dict(summaries))
        return clone

    def summary(self, node_id: str) -> str | None:
        return self.summaries.get(node_id)

    def children(self, node_id: str) -> list[CodeNode]:
        return [self._nodes[c] for c in self[node_id].children]

    def walk(self, start: str = ROOT_ID) -> Iterator[CodeNode]:
        """Pre-order traversal in child order."""
        stack = [start]
        while stack:
            node = self._nodes[stack.pop()]
            yield node
            stack.extend(reversed(node.children))

    def ancestors(self, node_id: str) -> list[CodeNode]:
        out = []
        cur = self[node_id].parent
        while cur is not None:
            node = self._nodes[cur]
            out.append(node)
            cur = node.parent
        return out

    def descendants(self, node_id: str) -> Iterator[CodeNode]:
        it = self.walk(node_id)
        next(it)
        return it

    def file_of(self, node_id: str) -> CodeNode | None:
        node = self[node_id]
        while node.kind is NodeKind.SYMBOL:
            node = self._nodes[node.parent]
        return node if node.kind is NodeKind.FILE else None

    def symbols(self) -> Iterator[CodeNode]:
        return (n for n in self._nodes.values() if n.kind is NodeKind.SYMBOL)

    def files(self) -> Iterator[CodeNode]:
        return (n for n in self._nodes.values() if n.kind is NodeKind.FILE)

    def out_edges(self, node_id: str) -> tuple[tuple[str, EdgeType], ...]:
        return self._out.get(node_id, ())

    def in_edges(self, node_id: str) -> tuple[tuple[str, EdgeType], ...]:
        return self._in.get(node_id, ())

    def all_out_edges(self) -> dict[str, list[DependencyEdge]]:
        """Every outgoing edge by source, unresolved included."""
        out: dict[str, list[DependencyEdge]] = {}
        for e in self.edges:
            out.setdefault(e.source, []).append(e)
        return out

    def structure(self) -> dict[str, Any]:
        """Canonical content for structural equality (timings excluded)."""
        return {
            "nodes": sorted((n.to_json() for n in self._nodes.values()), key=lambda d: d["id"]),
            "edges": sorted((e.source, e.target, e.edge_type.value, e.resolved) for e in self.edges),
            "summary_mode": self.summary_mode,
            "summaries": dict(sorted(self.summaries.items())),
        }

    def structurally_equal(self, other: CodeIndexTree) -> bool:
        return self.structure() == other.structure()

    def check_invariants(self) -> None:
        """Raise AssertionError if kind ordering, parent links or counts are broken."""
        roots = [n for n in self._nodes.values() if n.kind is NodeKind.ROOT]
        assert len(roots) == 1 and roots[0].id == ROOT_ID, "exactly one root expected"
        seen = 0
        for node in self.walk():
            seen += 1
            for cid in node.children:
                child = self._nodes[cid]
                assert child.parent == node.id, f"{cid} parent link broken"
                assert child.kind in _CHILD_KINDS[node.kind], f"{node.kind.value} -> {child.kind.value} at {cid}"
                assert child.depth == node.depth + 1, f"{cid} depth mismatch"
        assert seen == len(self._nodes), "unreachable nodes present"
        counts = {k: 0 for k in NodeKind}
        for n in self._nodes.values():
            counts[n.kind] += 1
        assert self.stats.node_count == len(self._nodes)
        assert len(self._nodes) == 1 + counts[NodeKind.DIRECTORY] + counts[NodeKind.FILE] + counts[NodeKind.SYMBOL]
        for e in self.edges:
            assert self._nodes[e.source].kind is NodeKind.SYMBOL, f"edge source {e.source} is not a symbol"
            if e.resolved:
                assert e.target in self._nodes


__all__ = [
    "ROOT_ID", "NodeKind", "EdgeType", "SYMBOL_TYPES", "CodeNode", "DependencyEdge", "BuildStats",
    "CodeIndexTree", "CodeIndexError", "StaleIndexError", "IndexFormatError", "VersionMismatchError",
    "UnknownNodeError"
]
