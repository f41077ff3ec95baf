"""Build a :class:`CodeIndexTree` from a directory on disk."""

from __future__ import annotations

import logging
import os
import posixpath
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from rgao.codeindex.analyzer import RawSymbol, grammar_for, language_for
from rgao.codeindex.model import (
    ROOT_ID,
    BuildStats,
    CodeIndexTree,
    CodeNode,
    DependencyEdge,
    EdgeType,
    NodeKind,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_DEPTH = 10
DEFAULT_EXCLUDED_DIRS = frozenset({
    ".git", ".hg", ".svn", "__pycache__", "node_modules", ".venv", "venv", ".tox",
    ".mypy_cache", ".pytest_cache", "dist", "build", ".idea", ".vscode",
})
_CALLABLE = frozenset({"function", "method", "class"})
_EXPORTABLE = frozenset({"function", "class", "variable"})


@dataclass(frozen=True)
class IndexConfig:
    max_depth: int = DEFAULT_MAX_DEPTH
    languages: frozenset[str] | None = None  # None: every recognised language
    excluded_dirs: frozenset[str] = DEFAULT_EXCLUDED_DIRS

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


@dataclass
class _ParsedFile:
    path: str
    language: str
    size: int
    mtime_ns: int
    length: int
    line_count: int
    line_offsets: list[int]
    symbols: list[RawSymbol]


def symbol_id(path: str, sym: RawSymbol) -> str:
    return f"{path}::{sym.qualname}@{sym.start_line}"


def _scan(root: str, config: IndexConfig, warnings: list[str]) -> list[tuple[str, str]]:
    found: list[tuple[str, str]] = []
    prefix = len(root.rstrip(os.sep)) + 1
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        rel_dir = dirpath[prefix:].replace(os.sep, "/")
        depth = rel_dir.count("/") + 1 if rel_dir else 0
        kept = []
        for d in sorted(dirnames):
            if d in config.excluded_dirs or d.startswith("."):
                continue
            if depth + 1 > config.max_depth:
                warnings.append(f"skipped {posixpath.join(rel_dir, d)}: deeper than max_depth={config.max_depth}")
                continue
            kept.append(d)
        dirnames[:] = kept
        for name in sorted(filenames):
            lang = language_for(os.path.splitext(name)[1])
            if lang is None or (config.languages is not None and lang not in config.languages):
                continue
            found.append((f"{rel_dir}/{name}" if rel_dir else name, lang))
    return found


def _parse_file(root: str, rel: str, lang: str, warnings: list[str]) -> _ParsedFile | None:
    try:
        with open(os.path.join(root, rel), "rb") as fh:
            st = os.fstat(fh.fileno())
            data = fh.read()
    except OSError as exc:
        warnings.append(f"unreadable file {rel}: {exc.strerror or exc}")
        return None
    text = data.decode("utf-8", errors="replace")
    lines = text.splitlines(keepends=True)
    offsets = [0]
    total = 0
    for line in lines:
        total += len(line)
        offsets.append(total)
    grammar = grammar_for(os.path.splitext(rel)[1])
    symbols = grammar.parse(text) if grammar is not None else []
    return _ParsedFile(rel, lang, st.st_size, st.st_mtime_ns, len(text), len(lines), offsets, symbols)


def _module_candidates(module: str, importer: str) -> list[str]:
    """Repo-relative path stems (no suffix) that an import may refer to."""
    base = posixpath.dirname(importer)
    if module.startswith("./") or module.startswith("../"):
        stem = posixpath.normpath(posixpath.join(base, module))
        return [stem, f"{stem}/index"]
    if module.startswith("."):
        level = len(module) - len(module.lstrip("."))
        pkg = base
        for _ in range(level - 1):
            pkg = posixpath.dirname(pkg)
        rest = module.lstrip(".").replace(".", "/")
        stem = posixpath.join(pkg, rest) if rest else pkg
        return [stem, f"{stem}/__init__"]
    stem = module.replace(".", "/") if "/" not in module else module
    return [stem, f"{stem}/__init__", f"{stem}/index"]


class _Resolver:
    def __init__(self, files: list[_ParsedFile]) -> None:
        self.by_name: dict[str, list[str]] = defaultdict(list)
        self.classes: dict[str, list[str]] = defaultdict(list)
        self.exports: dict[str, dict[str, list[str]]] = {}
        self.stems: dict[str, list[str]] = defaultdict(list)  # path stem -> files
        for f in files:
            stem = f.path.rsplit(".", 1)[0]
            self.stems[stem].append(f.path)
            exports: dict[str, list[str]] = defaultdict(list)
            for s in f.symbols:
                sid = symbol_id(f.path, s)
                if s.symbol_type in _CALLABLE:
                    self.by_name[s.name].append(sid)
                if s.symbol_type == "class":
                    self.classes[s.name].append(sid)
                if s.parent is None and s.symbol_type in _EXPORTABLE:
                    exports[s.name].append(sid)
            self.exports[f.path] = exports

    def module_files(self, module: str, importer: str) -> list[str]:
        out: list[str] = []
        for cand in _module_candidates(module, importer):
            out.extend(self.stems.get(cand, ()))
            if not out and not cand.startswith("."):
                # src-layout and similar: match on a path suffix.
                suffix = "/" + cand
                for stem, paths in self.stems.items():
                    if stem.endswith(suffix):
                        out.extend(paths)
            if out:
                break
        return sorted(set(out))


def _edges_for(f: _ParsedFile, s: RawSymbol, sid: str, resolver: _Resolver) -> list[DependencyEdge]:
    edges: list[DependencyEdge] = []
    if s.symbol_type == "import":
        files = resolver.module_files(s.module or s.name, f.path)
        if not s.imported_names:
            edges.append(DependencyEdge(sid, s.module or s.name, EdgeType.IMPORTS, False))
        for name in s.imported_names:
            targets = sorted({t for path in files for t in resolver.exports[path].get(name, ())})
            if targets:
                edges.extend(DependencyEdge(sid, t, EdgeType.IMPORTS, True) for t in targets)
            else:
                edges.append(DependencyEdge(sid, f"{s.module}.{name}", EdgeType.IMPORTS, False))
        return edges
    for name in s.calls:
        targets = [t for t in resolver.by_name.get(name, ()) if t != sid]
        if targets:
            edges.extend(DependencyEdge(sid, t, EdgeType.CALLS, True) for t in targets)
        else:
            edges.append(DependencyEdge(sid, name, EdgeType.CALLS, False))
    for base in s.bases:
        targets = [t for t in resolver.classes.get(base, ()) if t != sid]
        if targets:
            edges.extend(DependencyEdge(sid, t, EdgeType.INHERITS, True) for t in targets)
        else:
            edges.append(DependencyEdge(sid, base, EdgeType.INHERITS, False))
    return edges


def build_index(root_path: str | os.PathLike[str], config: IndexConfig | None = None) -> CodeIndexTree:
    """Index every recognised source file under ``root_path``.

    Content is not stored; nodes keep spans and file metadata so that
    :func:`~rgao.codeindex.store.fetch_content` can read it back on demand.
    """
    config = config or IndexConfig()
    started = time.perf_counter()
    root = Path(root_path)
    if not root.is_dir():
        raise NotADirectoryError(f"index root {str(root)!r} is not a directory")
    if not os.access(root, os.R_OK | os.X_OK):
        raise PermissionError(f"index root {str(root)!r} is not readable")
    warnings: list[str] = []
    root_str = str(root.resolve())
    parsed = [p for rel, lang in _scan(root_str, config, warnings)
              if (p := _parse_file(root_str, rel, lang, warnings)) is not None]
    for w in warnings:
        logger.warning(w)

    children: dict[str, list[str]] = defaultdict(list)
    nodes: dict[str, dict] = {ROOT_ID: dict(id=ROOT_ID, kind=NodeKind.ROOT, name=root.resolve().name or "/",
                                            path="", parent=None, depth=0)}

    def ensure_dir(rel_dir: str) -> str:
        if rel_dir in ("", "."):
            return ROOT_ID
        if rel_dir not in nodes:
            parent = ensure_dir(posixpath.dirname(rel_dir))
            nodes[rel_dir] = dict(id=rel_dir, kind=NodeKind.DIRECTORY, name=posixpath.basename(rel_dir),
                                  path=rel_dir, parent=parent, depth=nodes[parent]["depth"] + 1)
            children[parent].append(rel_dir)
        return rel_dir

    for f in parsed:
        parent = ensure_dir(posixpath.dirname(f.path))
        imports = tuple(s.module or s.name for s in f.symbols if s.symbol_type == "import")
        nodes[f.path] = dict(id=f.path, kind=NodeKind.FILE, name=posixpath.basename(f.path), path=f.path,
                             parent=parent, depth=nodes[parent]["depth"] + 1, language=f.language,
                             size=f.size, mtime_ns=f.mtime_ns, length=f.length, line_count=f.line_count,
                             imports=imports)
        children[parent].append(f.path)
        by_qual: dict[str, str] = {}
        for s in f.symbols:
            sid = symbol_id(f.path, s)
            owner = by_qual.get(s.parent, f.path) if s.parent else f.path
            by_qual.setdefault(s.qualname, sid)
            start, end = s.start_line, max(s.end_line, s.start_line)
            length = f.line_offsets[min(end, f.line_count)] - f.line_offsets[start - 1]
            nodes[sid] = dict(id=sid, kind=NodeKind.SYMBOL, name=s.name, path=f.path, parent=owner,
                              depth=nodes[owner]["depth"] + 1, language=f.language,
                              symbol_type=s.symbol_type, signature=s.signature, docstring=s.docstring,
                              start_line=start, end_line=end, length=length,
                              line_count=end - start + 1)
            children[owner].append(sid)

    resolver = _Resolver(parsed)
    edges: list[DependencyEdge] = []
    seen: set[tuple[str, str, EdgeType]] = set()
    for f in parsed:
        for s in f.symbols:
            sid = symbol_id(f.path, s)
            for e in _edges_for(f, s, sid, resolver):
                key = (e.source, e.target, e.edge_type)
                if key not in seen:
                    seen.add(key)
                    edges.append(e)

    def order(nid: str) -> tuple:
        n = nodes[nid]
        return (0 if n["kind"] is NodeKind.DIRECTORY else 1, n["name"])

    final = {}
    for nid, fields in nodes.items():
        kids = children.get(nid, ())
        if fields["kind"] in (NodeKind.ROOT, NodeKind.DIRECTORY):
            kids = sorted(kids, key=order)  # directories first, then files, by name
        final[nid] = CodeNode(**fields, children=tuple(kids))
    counts = defaultdict(int)
    for n in final.values():
        counts[n.kind] += 1
    stats = BuildStats(
        file_count=counts[NodeKind.FILE], directory_count=counts[NodeKind.DIRECTORY],
        symbol_count=counts[NodeKind.SYMBOL], node_count=len(final), edge_count=len(edges),
        unresolved_edge_count=sum(1 for e in edges if not e.resolved),
        build_seconds=time.perf_counter() - started, max_depth=config.max_depth,
        warnings=tuple(warnings),
    )
    return CodeIndexTree(final, edges, stats, root_path=root_str)
