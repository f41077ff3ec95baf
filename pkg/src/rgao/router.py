"""Complexity extraction and the threshold topology router.

The router reads a five-component complexity vector derived from retrieval
results and picks one of four orchestration topologies.  A keyword-table
baseline (:func:`regex_route`) is kept for comparison.
"""

from __future__ import annotations

import json
import posixpath
import re
import sys
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from rgao.codeindex.model import CodeIndexTree, NodeKind
from rgao.retrieval.types import RetrievalResult


class TopologyKind(str, Enum):
    FAST_PATH = "FastPath"
    SUB_AGENT = "SubAgent"
    MULTI_AGENT = "MultiAgent"
    DEEP_RESEARCH = "DeepResearch"


class SubMode(str, Enum):
    PIPELINE = "pipeline"
    SWARM = "swarm"


@dataclass(frozen=True, slots=True)
class Topology:
    kind: TopologyKind
    sub_mode: SubMode | None = None

    def __post_init__(self) -> None:
        if (self.kind is TopologyKind.MULTI_AGENT) != (self.sub_mode is not None):
            raise ValueError("sub_mode is required for MultiAgent and forbidden otherwise")

    @classmethod
    def parse(cls, text: str) -> Topology:
        kind, _, sub = text.partition("/")
        kind = TopologyKind(kind)
        if kind is TopologyKind.MULTI_AGENT:
            return cls(kind, SubMode(sub or "pipeline"))
        return cls(kind)

    def __str__(self) -> str:
        return self.kind.value if self.sub_mode is None else f"{self.kind.value}/{self.sub_mode.value}"


FAST_PATH = Topology(TopologyKind.FAST_PATH)
SUB_AGENT = Topology(TopologyKind.SUB_AGENT)
DEEP_RESEARCH = Topology(TopologyKind.DEEP_RESEARCH)
PIPELINE = Topology(TopologyKind.MULTI_AGENT, SubMode.PIPELINE)
SWARM = Topology(TopologyKind.MULTI_AGENT, SubMode.SWARM)


class ConsistencyError(ValueError):
    """A retrieval result references nodes that are not in the tree."""


@dataclass(frozen=True, slots=True)
class ComplexityVector:
    d_dep: int = 0
    n_f: int = 0
    n_s: int = 0
    h_t: int = 0
    rho_x: float = 0.0

    def __post_init__(self) -> None:
        for name in ("d_dep", "n_f", "n_s", "h_t"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.rho_x <= 1.0:
            raise ValueError("rho_x must lie in [0, 1]")

    def as_tuple(self) -> tuple[int, int, int, int, float]:
        return (self.d_dep, self.n_f, self.n_s, self.h_t, self.rho_x)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class RouterConfig:
    fast_path_ceiling: float = 0.45
    multi_agent_floor: float = 1.05
    scope_breadth_promote: float = 0.60
    dependency_depth_promote: float = 0.50
    modification_risk_promote: float = 0.40
    ambiguity_research_threshold: float = 0.70
    swarm_coupling_threshold: float = 0.5
    multi_agent_file_count: int = 3
    cap_d_dep: float = 8.0
    cap_n_f: float = 12.0
    cap_n_s: float = 60.0
    cap_h_t: float = 20.0
    sensitive_path_patterns: tuple[str, ...] = ("auth", "security", "migrations")

    def __post_init__(self) -> None:
        if not 0 < self.fast_path_ceiling < self.multi_agent_floor:
            raise ValueError("need 0 < fast_path_ceiling < multi_agent_floor")
        for name in ("scope_breadth_promote", "dependency_depth_promote", "modification_risk_promote",
                     "ambiguity_research_threshold", "swarm_coupling_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("cap_d_dep", "cap_n_f", "cap_n_s", "cap_h_t"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.multi_agent_file_count < 1:
            raise ValueError("multi_agent_file_count must be >= 1")
        object.__setattr__(self, "sensitive_path_patterns", tuple(self.sensitive_path_patterns))

    @classmethod
    def from_mapping(cls, obj: Mapping[str, Any]) -> RouterConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown router config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def load(cls, path: str | Path) -> RouterConfig:
        p = Path(path)
        if p.suffix.lower() == ".toml":
            with p.open("rb") as fh:
                data = tomllib.load(fh)
            data = data.get("router", data)
        else:
            data = json.loads(p.read_text(encoding="utf-8"))
        return cls.from_mapping(data)

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["sensitive_path_patterns"] = list(self.sensitive_path_patterns)
        return out


@dataclass(frozen=True)
class RoutingDecision:
    topology: Topology
    decided_by: str
    triggered_rules: tuple[str, ...]
    signals: Mapping[str, float]
    aggregate: float
    complexity: ComplexityVector
    ambiguity: float
    sensitive_paths: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.triggered_rules:
            raise ValueError("a routing decision records at least one rule")

    def to_json(self) -> dict[str, Any]:
        return {
            "topology": str(self.topology), "kind": self.topology.kind.value,
            "sub_mode": self.topology.sub_mode.value if self.topology.sub_mode else None,
            "decided_by": self.decided_by, "triggered_rules": list(self.triggered_rules),
            "signals": dict(self.signals), "aggregate": self.aggregate,
            "complexity": self.complexity.to_json(), "ambiguity": self.ambiguity,
            "sensitive_paths": list(self.sensitive_paths),
        }


# -- extraction ---------------------------------------------------------------

_PATH_SEARCH_LIMIT = 200_000


def _longest_simple_path(nodes: Sequence[str], adj: Mapping[str, Sequence[str]]) -> int:
    """Edge count of the longest simple path; exhaustive DFS with a step budget."""
    best = 0
    steps = 0
    for start in nodes:
        stack = [(start, 0, iter(adj.get(start, ())))]
        on_path = {start}
        while stack:
            node, depth, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                stack.pop()
                on_path.discard(node)
                continue
            steps += 1
            if steps > _PATH_SEARCH_LIMIT:
                return best
            if nxt in on_path:
                continue
            on_path.add(nxt)
            best = max(best, depth + 1)
            stack.append((nxt, depth + 1, iter(adj.get(nxt, ()))))
    return best


def extract_complexity(tree: CodeIndexTree, result: RetrievalResult | Iterable[str]) -> ComplexityVector:
    """Complexity signals over the retrieved nodes (primary and expansion results)."""
    ids = list(dict.fromkeys(result.ids if isinstance(result, RetrievalResult) else result))
    missing = [nid for nid in ids if nid not in tree]
    if missing:
        raise ConsistencyError(f"retrieval result references unknown nodes: {missing[:3]}")
    if not ids:
        return ComplexityVector()
    symbols = [nid for nid in ids if tree[nid].kind is NodeKind.SYMBOL]
    files = set()
    for nid in ids:
        f = tree.file_of(nid)
        if f is not None:
            files.add(f.id)
    h_t = max(tree[nid].depth for nid in ids)

    retrieved = set(symbols)
    adj = {s: [t for t, _ in tree.out_edges(s) if t in retrieved and t != s] for s in symbols}
    d_dep = _longest_simple_path(symbols, adj)

    coupled = 0
    for s in symbols:
        home = posixpath.dirname(tree[s].path)
        if any(posixpath.dirname(tree[t].path) != home for t, _ in tree.out_edges(s)):
            coupled += 1
    rho = coupled / len(symbols) if symbols else 0.0
    return ComplexityVector(d_dep, len(files), len(symbols), h_t, rho)


def touched_paths(tree: CodeIndexTree, result: RetrievalResult | Iterable[str]) -> tuple[str, ...]:
    ids = result.ids if isinstance(result, RetrievalResult) else result
    return tuple(sorted({tree[nid].path for nid in ids if tree[nid].path}))


# -- routing ------------------------------------------------------------------


def normalized_signals(c: ComplexityVector, config: RouterConfig) -> dict[str, float]:
    return {
        "d_dep": min(1.0, c.d_dep / config.cap_d_dep),
        "n_f": min(1.0, c.n_f / config.cap_n_f),
        "n_s": min(1.0, c.n_s / config.cap_n_s),
        "h_t": min(1.0, c.h_t / config.cap_h_t),
        "rho_x": min(1.0, c.rho_x),
    }


def sensitive_matches(paths: Iterable[str], config: RouterConfig) -> tuple[str, ...]:
    pats = [p.lower() for p in config.sensitive_path_patterns]
    return tuple(p for p in paths if any(pat in p.lower() for pat in pats))


def route(c: ComplexityVector, ambiguity: float, config: RouterConfig = RouterConfig(),
          paths: Iterable[str] = ()) -> RoutingDecision:
    """Threshold router.  Rules, first match wins:

    1. ambiguity at or above the research threshold: DeepResearch;
    2. one file, no coupling, aggregate below the fast-path ceiling: FastPath;
    3. more than three files or aggregate at the multi-agent floor: MultiAgent
       (swarm when coupling reaches the sub-mode cut, else pipeline);
    4. SubAgent, promoted to MultiAgent on breadth, depth or risk signals.

    ``paths`` are the retrieved file paths, used only for the risk signal.
    """
    if not 0.0 <= ambiguity <= 1.0:
        raise ValueError("ambiguity must lie in [0, 1]")
    norm = normalized_signals(c, config)
    aggregate = sum(norm.values())
    hits = sensitive_matches(paths, config)
    breadth, depth, risk = norm["n_f"], norm["d_dep"], 1.0 if hits else 0.0
    signals = {**norm, "breadth": breadth, "depth": depth, "risk": risk}
    multi_mode = PIPELINE if c.rho_x < config.swarm_coupling_threshold else SWARM

    rules = [
        ("ambiguity_research", ambiguity >= config.ambiguity_research_threshold, DEEP_RESEARCH),
        ("fast_path", c.n_f == 1 and c.rho_x == 0 and aggregate < config.fast_path_ceiling, FAST_PATH),
        ("multi_agent_files", c.n_f > config.multi_agent_file_count, multi_mode),
        ("multi_agent_aggregate", aggregate >= config.multi_agent_floor, multi_mode),
        ("scope_breadth_promote", breadth >= config.scope_breadth_promote, multi_mode),
        ("dependency_depth_promote", depth >= config.dependency_depth_promote, multi_mode),
        ("modification_risk_promote", risk >= config.modification_risk_promote, multi_mode),
    ]
    triggered = [name for name, hit, _ in rules if hit]
    decided = next(((name, topo) for name, hit, topo in rules if hit), None)
    if decided is None:
        triggered.append("sub_agent")
        decided = ("sub_agent", SUB_AGENT)
    name, topology = decided
    if topology.kind is TopologyKind.MULTI_AGENT:
        triggered.append(f"sub_mode_{topology.sub_mode.value}")
    return RoutingDecision(topology, name, tuple(triggered), signals, aggregate, c, ambiguity, hits)


# -- keyword baseline -----------------------------------------------------------


@dataclass(frozen=True)
class RegexRules:
    version: int
    default: Topology
    rules: tuple[tuple[str, Topology, tuple[tuple[str, ...], ...]], ...]

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> RegexRules:
        rules = []
        for r in obj["rules"]:
            groups = tuple(tuple(g) for g in r["all_groups"]) if "all_groups" in r else (tuple(r["any"]),)
            rules.append((r["name"], Topology.parse(r["topology"]), groups))
        return cls(int(obj["version"]), Topology.parse(obj["default"]), tuple(rules))


@lru_cache(maxsize=1)
def default_regex_rules() -> RegexRules:
    text = resources.files("rgao.data").joinpath("regex_rules.json").read_text(encoding="utf-8")
    return RegexRules.from_json(json.loads(text))


@lru_cache(maxsize=4096)
def _cue_pattern(cue: str) -> re.Pattern[str]:
    return re.compile(rf"(?<![\w]){re.escape(cue)}(?![\w])", re.IGNORECASE)


def regex_route(task_text: str, rules: RegexRules | None = None) -> Topology:
    """Keyword-table baseline: the first rule whose every cue group matches wins."""
    rules = rules or default_regex_rules()
    for _name, topology, groups in rules.rules:
        if all(any(_cue_pattern(c).search(task_text) for c in group) for group in groups):
            return topology
    return rules.default
