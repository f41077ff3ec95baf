"""Six-dimensional budget vectors, trackers, and the static conservation verifier.

A delegation forest passes verification when, at every node ``A``::

    direct_cost(A) (+) sum(budget(child) for child in children(A))  <=  budget(A)

component-wise.  The check is a single iterative pass over nodes and edges.
"""

from __future__ import annotations

import json
import threading
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

DIMENSIONS = ("iterations", "tool_calls", "tokens", "seconds", "retries", "handoffs")
MAX_COMPONENT = 2**63 - 1


class BudgetError(Exception):
    """Base class for budget-algebra errors."""


class BudgetOverflowError(BudgetError, ArithmeticError):
    """A composed component left the representable range."""


class ForestStructureError(BudgetError, ValueError):
    """The delegation structure is not a well-formed forest."""


class PreconditionError(BudgetError):
    """An operation that needs a verified forest received an unverified one."""


@dataclass(frozen=True, slots=True)
class BudgetVector:
    iterations: int = 0
    tool_calls: int = 0
    tokens: int = 0
    seconds: int = 0
    retries: int = 0
    handoffs: int = 0

    def __post_init__(self) -> None:
        for name in DIMENSIONS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"budget component {name} must be an int, got {value!r}")
            if value < 0:
                raise ValueError(f"budget component {name} must be >= 0, got {value}")
            if value > MAX_COMPONENT:
                raise BudgetOverflowError(f"budget component {name} exceeds {MAX_COMPONENT}")

    @classmethod
    def of(cls, values: Iterable[int]) -> BudgetVector:
        values = tuple(values)
        if len(values) != len(DIMENSIONS):
            raise ValueError(f"expected {len(DIMENSIONS)} components, got {len(values)}")
        return cls(*values)

    @classmethod
    def zero(cls) -> BudgetVector:
        return _ZERO

    def __iter__(self) -> Iterator[int]:
        return iter(self.as_tuple())

    def __getitem__(self, index: int) -> int:
        return self.as_tuple()[index]

    def __len__(self) -> int:
        return len(DIMENSIONS)

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.iterations, self.tool_calls, self.tokens,
                self.seconds, self.retries, self.handoffs)

    def to_list(self) -> list[int]:
        return list(self.as_tuple())

    def is_zero(self) -> bool:
        return not any(self.as_tuple())

    def __add__(self, other: BudgetVector) -> BudgetVector:
        return oplus(self, other)

    def headroom(self, used: BudgetVector) -> BudgetVector:
        """Component-wise ``self - used``; raises if any component goes negative."""
        diff = [a - b for a, b in zip(self, used)]
        if min(diff) < 0:
            raise ValueError(f"{used} does not fit inside {self}")
        return BudgetVector.of(diff)


_ZERO = BudgetVector()


def oplus(a: BudgetVector, b: BudgetVector) -> BudgetVector:
    """Parallel composition: component-wise sum with checked overflow."""
    out = []
    for name, x, y in zip(DIMENSIONS, a.as_tuple(), b.as_tuple()):
        s = x + y
        if s > MAX_COMPONENT:
            raise BudgetOverflowError(f"overflow on {name}: {x} + {y}")
        out.append(s)
    return BudgetVector(*out)


def otimes_sequential(a: BudgetVector, b: BudgetVector) -> BudgetVector:
    """Sequential composition.

    Consumption of ``G1; G2`` is the sum of both stages on every tracked
    dimension, so this is the same component-wise sum as :func:`oplus`.
    """
    return oplus(a, b)


def osum(vectors: Iterable[BudgetVector]) -> BudgetVector:
    total = _ZERO
    for v in vectors:
        total = oplus(total, v)
    return total


def leq(a: BudgetVector, b: BudgetVector) -> bool:
    """Component-wise partial order."""
    return all(x <= y for x, y in zip(a.as_tuple(), b.as_tuple()))


class BudgetTracker:
    """Monotone usage counters guarded by check-before-operation admission.

    ``admit`` never lets ``used`` pass ``limit`` on any component.  The
    ``exceeded`` flag latches when an admission is refused or when a
    component with a positive limit has been used up (``used_i >= limit_i``);
    once set, every further non-zero cost is refused.  A zero limit means the
    resource was never granted: positive requests on it are refused, but it
    does not mark a fresh tracker as exhausted.

    Trackers may be chained: a child admits a cost only if every ancestor can
    also absorb it, and the whole chain commits atomically.
    """

    def __init__(self, limit: BudgetVector, parent: BudgetTracker | None = None,
                 name: str = "") -> None:
        self.limit = limit
        self.parent = parent
        self.name = name
        self._limit = limit.as_tuple()
        self._used = (0,) * len(DIMENSIONS)
        self._refused = False
        self._exhausted = False
        self._lock: threading.RLock = parent._lock if parent is not None else threading.RLock()
        self._chain: tuple[BudgetTracker, ...] = (self, *parent.chain()) if parent is not None else (self,)

    @property
    def used(self) -> BudgetVector:
        return BudgetVector.of(self._used)

    @property
    def exceeded(self) -> bool:
        return self._refused or self._exhausted

    @property
    def remaining(self) -> BudgetVector:
        return self.limit.headroom(self.used)

    def _fits(self, cost: tuple[int, ...]) -> bool:
        if self._refused or self._exhausted:
            return False
        for u, c, b in zip(self._used, cost, self._limit):
            if u + c > b:
                return False
        return True

    def _commit(self, cost: tuple[int, ...]) -> None:
        used = tuple(u + c for u, c in zip(self._used, cost))
        self._used = used
        for u, b in zip(used, self._limit):
            if b > 0 and u >= b:
                self._exhausted = True
                break

    def chain(self) -> list[BudgetTracker]:
        return list(self._chain)

    def admit(self, cost: BudgetVector) -> bool:
        vec = cost.as_tuple()
        if not any(vec):
            return True
        with self._lock:
            chain = self._chain
            if all(t._fits(vec) for t in chain):
                for t in chain:
                    t._commit(vec)
                return True
            for t in chain:
                if not t._fits(vec):
                    t._refused = True
            self._refused = True
            return False

    def record_iteration(self, tokens: int = 0, seconds: int = 0) -> bool:
        return self.admit(BudgetVector(iterations=1, tokens=tokens, seconds=seconds))

    def record_tool_calls(self, count: int, extra: BudgetVector | None = None) -> bool:
        cost = BudgetVector(tool_calls=count)
        if extra is not None:
            cost = oplus(cost, extra)
        return self.admit(cost)

    def __repr__(self) -> str:
        return f"BudgetTracker(name={self.name!r}, limit={self.limit}, used={self.used})"


def tracker_admit(tracker: BudgetTracker, cost: BudgetVector) -> bool:
    return tracker.admit(cost)


# -- delegation forests -------------------------------------------------------


@dataclass(frozen=True, slots=True)
class DelegationNode:
    id: str
    budget: BudgetVector
    direct_cost: BudgetVector = field(default_factory=BudgetVector)
    children: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "budget": self.budget.to_list(),
            "direct_cost": self.direct_cost.to_list(),
            "children": list(self.children),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> DelegationNode:
        return cls(
            id=str(obj["id"]),
            budget=BudgetVector.of(obj["budget"]),
            direct_cost=BudgetVector.of(obj.get("direct_cost", [0] * 6)),
            children=tuple(str(c) for c in obj.get("children", ())),
        )


@dataclass(frozen=True, slots=True)
class Violation:
    node: str
    component: int
    composed: int
    limit: int

    @property
    def dimension(self) -> str:
        return DIMENSIONS[self.component]

    def to_json(self) -> dict[str, Any]:
        return {"node": self.node, "component": self.component, "dimension": self.dimension,
                "composed": self.composed, "limit": self.limit}


@dataclass(frozen=True, slots=True)
class VerificationReport:
    ok: bool
    violations: tuple[Violation, ...]
    nodes_visited: int
    edges_visited: int

    def to_json(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [v.to_json() for v in self.violations],
            "nodes_visited": self.nodes_visited,
            "edges_visited": self.edges_visited,
        }


class DelegationForest:
    """An id-indexed set of delegation nodes; roots are nodes nobody points to."""

    def __init__(self, nodes: Iterable[DelegationNode]) -> None:
        self.nodes: dict[str, DelegationNode] = {}
        duplicates = []
        for node in nodes:
            if node.id in self.nodes:
                duplicates.append(node.id)
            self.nodes[node.id] = node
        if duplicates:
            raise ForestStructureError(f"duplicate node ids: {sorted(set(duplicates))}")

    @property
    def roots(self) -> list[str]:
        pointed = {c for n in self.nodes.values() for c in n.children}
        return [nid for nid in self.nodes if nid not in pointed]

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: str) -> DelegationNode:
        return self.nodes[node_id]

    def to_json(self) -> list[dict[str, Any]]:
        return [n.to_json() for n in self.nodes.values()]

    @classmethod
    def from_json(cls, data: Any) -> DelegationForest:
        if isinstance(data, Mapping):
            data = data["nodes"]
        return cls(DelegationNode.from_json(obj) for obj in data)

    @classmethod
    def load(cls, path: str | Path) -> DelegationForest:
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")


def verify_conservation(forest: DelegationForest | Sequence[DelegationNode]) -> VerificationReport:
    if not isinstance(forest, DelegationForest):
        forest = DelegationForest(forest)
    nodes = forest.nodes
    parent_of: dict[str, str] = {}
    for node in nodes.values():
        for child in node.children:
            if child not in nodes:
                raise ForestStructureError(f"node {node.id!r} has dangling child {child!r}")
            if child in parent_of or child == node.id:
                raise ForestStructureError(f"node {child!r} has more than one parent or is its own parent")
            parent_of[child] = node.id

    roots = [nid for nid in nodes if nid not in parent_of]
    if nodes and not roots:
        raise ForestStructureError("delegation structure has no root (cycle)")

    violations: list[Violation] = []
    nodes_visited = 0
    edges_visited = 0
    stack = list(reversed(roots))
    while stack:
        nid = stack.pop()
        node = nodes[nid]
        nodes_visited += 1
        composed = list(node.direct_cost.as_tuple())
        for child in node.children:
            edges_visited += 1
            for i, v in enumerate(nodes[child].budget.as_tuple()):
                composed[i] += v
            stack.append(child)
        for i, (c, b) in enumerate(zip(composed, node.budget.as_tuple())):
            if c > b:
                violations.append(Violation(nid, i, c, b))

    if nodes_visited != len(nodes):
        unreachable = sorted(set(nodes) - _reachable(nodes, roots))
        raise ForestStructureError(f"cycle detected among nodes {unreachable}")
    return VerificationReport(not violations, tuple(violations), nodes_visited, edges_visited)


def _reachable(nodes: Mapping[str, DelegationNode], roots: Iterable[str]) -> set[str]:
    seen: set[str] = set()
    stack = list(roots)
    while stack:
        nid = stack.pop()
        if nid in seen:
            continue
        seen.add(nid)
        stack.extend(nodes[nid].children)
    return seen


@dataclass(frozen=True)
class VerifiedForest:
    """A forest with a passing report; only :func:`certify` should build one."""

    forest: DelegationForest
    root: str
    report: VerificationReport

    @property
    def budget(self) -> BudgetVector:
        return self.forest[self.root].budget


def certify(forest: DelegationForest | Sequence[DelegationNode]) -> VerifiedForest:
    if not isinstance(forest, DelegationForest):
        forest = DelegationForest(forest)
    report = verify_conservation(forest)
    if not report.ok:
        raise PreconditionError(f"forest fails conservation: {[v.to_json() for v in report.violations]}")
    roots = forest.roots
    if len(roots) != 1:
        raise PreconditionError(f"expected a single root, found {len(roots)}")
    return VerifiedForest(forest, roots[0], report)


def _compose(r1: VerifiedForest, r2: VerifiedForest, budget: BudgetVector,
             root_id: str | None) -> VerifiedForest:
    for r in (r1, r2):
        if not isinstance(r, VerifiedForest):
            raise PreconditionError("composition requires forests returned by certify()")
    clash = set(r1.forest.nodes) & set(r2.forest.nodes)
    if clash:
        raise ForestStructureError(f"forests share node ids: {sorted(clash)[:5]}")
    root_id = root_id or f"({r1.root}|{r2.root})"
    if root_id in r1.forest.nodes or root_id in r2.forest.nodes:
        raise ForestStructureError(f"root id {root_id!r} already in use")
    root = DelegationNode(root_id, budget, BudgetVector.zero(), (r1.root, r2.root))
    merged = DelegationForest([root, *r1.forest.nodes.values(), *r2.forest.nodes.values()])
    # Subtrees are already verified; the new root holds with equality,
    # so the combined report is assembled rather than recomputed.
    report = VerificationReport(
        ok=True,
        violations=(),
        nodes_visited=r1.report.nodes_visited + r2.report.nodes_visited + 1,
        edges_visited=r1.report.edges_visited + r2.report.edges_visited + 2,
    )
    return VerifiedForest(merged, root_id, report)


def compose_parallel(r1: VerifiedForest, r2: VerifiedForest,
                     root_id: str | None = None) -> VerifiedForest:
    if not isinstance(r1, VerifiedForest) or not isinstance(r2, VerifiedForest):
        raise PreconditionError("composition requires forests returned by certify()")
    return _compose(r1, r2, oplus(r1.budget, r2.budget), root_id)


def compose_sequential(r1: VerifiedForest, r2: VerifiedForest,
                       root_id: str | None = None) -> VerifiedForest:
    if not isinstance(r1, VerifiedForest) or not isinstance(r2, VerifiedForest):
        raise PreconditionError("composition requires forests returned by certify()")
    return _compose(r1, r2, otimes_sequential(r1.budget, r2.budget), root_id)
