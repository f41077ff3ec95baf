"""Task DAG construction and keyword pipeline detection."""

from __future__ import annotations

import graphlib
import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from rgao.contracts import Contract, default_registry

MAX_RETRIES = 2


class CyclicDependencyError(ValueError):
    def __init__(self, cycle: Sequence[str]) -> None:
        self.cycle = list(cycle)
        super().__init__("cyclic task dependency: " + " -> ".join(self.cycle))


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    DONE = "done"
    FAILED = "failed"
    SKIPPED = "skipped"


@dataclass(frozen=True, slots=True)
class TaskSpec:
    id: str
    contract: str
    description: str = ""
    deps: tuple[str, ...] = ()


@dataclass(slots=True)
class SwarmTask:
    id: str
    contract: str
    description: str
    deps: tuple[str, ...]
    read_only: bool
    status: TaskStatus = TaskStatus.PENDING
    retries: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.retries <= MAX_RETRIES:
            raise ValueError(f"retry count must lie in [0, {MAX_RETRIES}]")

    def fresh(self) -> SwarmTask:
        return SwarmTask(self.id, self.contract, self.description, self.deps, self.read_only)

    def to_json(self) -> dict:
        return {"id": self.id, "contract": self.contract, "description": self.description,
                "deps": list(self.deps), "read_only": self.read_only, "status": self.status.value,
                "retries": self.retries}


@dataclass
class TaskDag:
    tasks: dict[str, SwarmTask]
    edges: tuple[tuple[str, str], ...]
    order: tuple[str, ...]
    build_ops: int = field(default=0, compare=False)

    def __len__(self) -> int:
        return len(self.tasks)

    def dependents(self, task_id: str) -> list[str]:
        return [b for a, b in self.edges if a == task_id]

    def fresh(self) -> TaskDag:
        """A copy with every task reset to pending."""
        return TaskDag({tid: t.fresh() for tid, t in self.tasks.items()}, self.edges, self.order, self.build_ops)

    def to_json(self) -> dict:
        return {"tasks": [t.to_json() for t in self.tasks.values()],
                "edges": [list(e) for e in self.edges], "order": list(self.order)}


def _is_read_only(contract: str, registry: Mapping[str, Contract]) -> bool:
    c = registry.get(contract)
    # Unknown contracts are treated as write-capable; the registry gate rejects them later.
    return c.read_only if c is not None else False


def build_dag(sequence: Iterable[str | TaskSpec], registry: Mapping[str, Contract] | None = None,
              description: str = "") -> TaskDag:
    """Contract names become a linear chain; explicit specs keep their declared deps."""
    registry = default_registry() if registry is None else registry
    specs: list[TaskSpec] = []
    ops = 0
    for i, item in enumerate(sequence):
        ops += 1
        if isinstance(item, TaskSpec):
            specs.append(item)
        else:
            deps = (specs[-1].id,) if specs else ()
            specs.append(TaskSpec(f"t{i}-{item.lower()}", item, description, deps))
    tasks: dict[str, SwarmTask] = {}
    for s in specs:
        if s.id in tasks:
            raise ValueError(f"duplicate task id {s.id!r}")
        tasks[s.id] = SwarmTask(s.id, s.contract, s.description, tuple(s.deps), _is_read_only(s.contract, registry))
    sorter: graphlib.TopologicalSorter[str] = graphlib.TopologicalSorter()
    edges = []
    for s in specs:
        sorter.add(s.id, *s.deps)
        for d in s.deps:
            ops += 1
            if d not in tasks:
                raise ValueError(f"task {s.id!r} depends on unknown task {d!r}")
            edges.append((d, s.id))
    try:
        order = tuple(sorter.static_order())
    except graphlib.CycleError as exc:
        raise CyclicDependencyError(exc.args[1]) from None
    return TaskDag(tasks, tuple(edges), order, ops)


# Ordered keyword table: a word maps to the first factory listing it.
PIPELINE_KEYWORDS: dict[str, frozenset[str]] = {
    "Researcher": frozenset({"research", "researching", "investigate", "investigating", "explore", "locate",
                             "study", "survey"}),
    "Planner": frozenset({"plan", "planning", "design", "outline"}),
    "Diagnostician": frozenset({"diagnose", "diagnosing", "debug", "debugging", "reproduce", "triage"}),
    "Coder": frozenset({"implement", "implementing", "fix", "fixing", "refactor", "build", "add",
                        "patch", "modify"}),
    "Tester": frozenset({"test", "tests", "testing", "verify"}),
    "Reviewer": frozenset({"review", "reviewing", "audit", "inspect"}),
}
_WORD = re.compile(r"[a-z]+")


def detect_pipeline(task_text: str) -> list[str]:
    """Contracts named by the task's action words, in order of mention; ``[Coder]`` if none."""
    lookup = {w: kind for kind, words in PIPELINE_KEYWORDS.items() for w in words}
    seq: list[str] = []
    for word in _WORD.findall(task_text.lower()):
        kind = lookup.get(word)
        if kind is not None and (not seq or seq[-1] != kind):
            seq.append(kind)
    return seq or ["Coder"]
