"""Swarm supervisor: budget pre-check, three gates, read-only fan-in and intervention recovery."""

from __future__ import annotations

import threading
import time
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from rgao.budget import (
    BudgetTracker,
    BudgetVector,
    DelegationForest,
    DelegationNode,
    VerificationReport,
    oplus,
    osum,
    verify_conservation,
)
from rgao.contracts import FACTORY_KINDS, Contract, default_registry
from rgao.swarm.agent import EventSink, SimulatedAgent, SubAgentResult, SubAgentStatus, run_subagent
from rgao.swarm.artifacts import SwarmArtifact, handoff_violations
from rgao.swarm.dag import MAX_RETRIES, SwarmTask, TaskDag, TaskStatus, detect_pipeline
from rgao.swarm.scripts import default_agent

SUPERVISOR = "supervisor"
SWARM_NODE = "swarm"


class InterventionKind(str, Enum):
    SKIP = "Skip"
    RETRY_SAME = "RetrySame"
    RETRY_DIFFERENT = "RetryDifferent"
    REPLAN = "Replan"
    ABORT = "Abort"


class SwarmStatus(str, Enum):
    EXECUTING = "Executing"
    COMPLETED = "Completed"
    CANCELLED = "Cancelled"
    BUDGET_EXCEEDED = "BudgetExceeded"
    FAILED = "Failed"
    REFUSED = "Refused"


_RETRYABLE = (SubAgentStatus.TIMEOUT, SubAgentStatus.ERROR)


def decide_intervention(status: SubAgentStatus, can_retry: bool) -> InterventionKind | None:
    """Default recovery table; ``None`` for a successful task."""
    if status is SubAgentStatus.SUCCESS:
        return None
    if status in _RETRYABLE and can_retry:
        return InterventionKind.RETRY_SAME
    return InterventionKind.SKIP


Policy = Callable[[SubAgentStatus, bool, SwarmTask], "InterventionKind | None"]


def default_policy(status: SubAgentStatus, can_retry: bool, task: SwarmTask) -> InterventionKind | None:
    return decide_intervention(status, can_retry)


# -- gates ----------------------------------------------------------------------


@dataclass(frozen=True)
class GateFailure:
    gate: int
    name: str
    status: SubAgentStatus
    reasons: tuple[str, ...]

    def to_json(self) -> dict[str, Any]:
        return {"gate": self.gate, "name": self.name, "status": self.status.value, "reasons": list(self.reasons)}


class ContractGateFailure(GateFailure):
    pass


class BudgetGateFailure(GateFailure):
    pass


class HandoffGateFailure(GateFailure):
    pass


def three_gates(task: SwarmTask, registry: Mapping[str, Contract], swarm_tracker: BudgetTracker,
                incoming: Sequence[SwarmArtifact], producers: Sequence[str] | None = None,
                on_event: EventSink | None = None) -> GateFailure | None:
    """Registry, swarm budget and handoff checks in order; ``None`` when all pass.

    Incoming artifacts must come from one of ``producers`` (by default the
    task's dependencies or the supervisor).
    """
    emit = on_event or (lambda _e, _d: None)
    if registry.get(task.contract) is None:
        emit("gate", {"task": task.id, "gate": 1, "ok": False})
        return ContractGateFailure(1, "contract", SubAgentStatus.ERROR,
                                   (f"contract {task.contract!r} is not in the registry",))
    emit("gate", {"task": task.id, "gate": 1, "ok": True})
    if swarm_tracker.exceeded:
        emit("gate", {"task": task.id, "gate": 2, "ok": False})
        return BudgetGateFailure(2, "budget", SubAgentStatus.BUDGET_EXCEEDED, ("swarm budget exceeded",))
    emit("gate", {"task": task.id, "gate": 2, "ok": True})
    known = list(producers) if producers is not None else [*task.deps, SUPERVISOR]
    reasons = tuple(f"{a.id}: {p}" for a in incoming for p in handoff_violations(a, known))
    emit("gate", {"task": task.id, "gate": 3, "ok": not reasons})
    if reasons:
        return HandoffGateFailure(3, "handoff", SubAgentStatus.ERROR, reasons)
    return None


# -- run records ----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TraceEvent:
    ts: float
    task: str | None
    event: str
    detail: Mapping[str, Any]

    def to_json(self) -> dict[str, Any]:
        return {"ts": self.ts, "task": self.task, "event": self.event, "detail": dict(self.detail)}


@dataclass(frozen=True, slots=True)
class InterventionRecord:
    task: str
    status: SubAgentStatus
    kind: InterventionKind
    attempt: int
    can_retry: bool

    def to_json(self) -> dict[str, Any]:
        return {"task": self.task, "status": self.status.value, "intervention": self.kind.value,
                "attempt": self.attempt, "can_retry": self.can_retry}


@dataclass
class SwarmRun:
    status: SwarmStatus
    budget: BudgetVector
    verification: VerificationReport
    tasks: dict[str, SwarmTask] = field(default_factory=dict)
    artifacts: dict[str, SwarmArtifact] = field(default_factory=dict)
    results: dict[str, list[SubAgentResult]] = field(default_factory=dict)
    trail: list[InterventionRecord] = field(default_factory=list)
    trace: list[TraceEvent] = field(default_factory=list)
    usage: BudgetVector = field(default_factory=BudgetVector)

    @property
    def completed(self) -> bool:
        return self.status is SwarmStatus.COMPLETED

    def interventions(self, kind: InterventionKind) -> list[InterventionRecord]:
        return [r for r in self.trail if r.kind is kind]

    def to_json(self) -> dict[str, Any]:
        return {"status": self.status.value, "budget": self.budget.to_list(), "usage": self.usage.to_list(),
                "verification": self.verification.to_json(),
                "tasks": [t.to_json() for t in self.tasks.values()],
                "artifacts": {k: a.to_json() for k, a in self.artifacts.items()},
                "trail": [r.to_json() for r in self.trail]}


# -- budgets --------------------------------------------------------------------


def swarm_reservation(dag: TaskDag) -> BudgetVector:
    """Retries and handoffs the supervisor itself charges to the swarm pool.

    One spare unit of each keeps a fully spent reservation from tripping the
    tracker's used-up rule, which would block every later task.
    """
    return BudgetVector(retries=MAX_RETRIES * len(dag) + 1, handoffs=len(dag.edges) + 1)


def delegation_forest(dag: TaskDag, swarm_budget: BudgetVector,
                      registry: Mapping[str, Contract]) -> DelegationForest:
    children = [DelegationNode(t.id, registry[t.contract].budget if t.contract in registry else BudgetVector())
                for t in dag.tasks.values()]
    root = DelegationNode(SWARM_NODE, swarm_budget, swarm_reservation(dag), tuple(c.id for c in children))
    return DelegationForest([root, *children])


def recommended_swarm_budget(dag: TaskDag, registry: Mapping[str, Contract] | None = None,
                             retry_slack: int = 1) -> BudgetVector:
    """Sum of task budgets plus the supervisor reservation plus slack for retried attempts."""
    registry = default_registry() if registry is None else registry
    budgets = [registry[t.contract].budget for t in dag.tasks.values() if t.contract in registry]
    total = oplus(osum(budgets), swarm_reservation(dag))
    if budgets and retry_slack > 0:
        peak = BudgetVector.of(max(col) for col in zip(*(b.as_tuple() for b in budgets)))
        for _ in range(retry_slack):
            total = oplus(total, peak)
    return total


# -- supervisor -----------------------------------------------------------------

BackendSource = Mapping[str, SimulatedAgent] | Callable[[SwarmTask], SimulatedAgent] | None


class _Supervisor:
    def __init__(self, dag: TaskDag, tracker: BudgetTracker, registry: Mapping[str, Contract],
                 policy: Policy, backends: BackendSource, text: str, wall_clock_timeout: float | None,
                 trace: list[TraceEvent], t0: float) -> None:
        self.dag = dag
        self.tracker = tracker
        self.registry = registry
        self.policy = policy
        self.backends = backends
        self.text = text
        self.wall_clock_timeout = wall_clock_timeout
        self.trace = trace
        self.t0 = t0
        self.state_lock = threading.Lock()
        self.trace_lock = threading.Lock()
        self.artifacts: dict[str, SwarmArtifact] = {}
        self.results: dict[str, list[SubAgentResult]] = {tid: [] for tid in dag.tasks}
        self.trail: list[InterventionRecord] = []
        self.handed_off: set[str] = set()
        self.agents: dict[tuple[str, str], SimulatedAgent] = {}
        self.aborted = False
        self.replans = 0

    def emit(self, event: str, detail: Mapping[str, Any]) -> None:
        with self.trace_lock:
            self.trace.append(TraceEvent(time.perf_counter() - self.t0, detail.get("task"), event, detail))

    def backend_for(self, task: SwarmTask) -> SimulatedAgent:
        key = (task.id, task.contract)
        agent = self.agents.get(key)
        if agent is None:
            if callable(self.backends):
                agent = self.backends(task)
            elif self.backends is not None and task.id in self.backends:
                agent = self.backends[task.id]
            else:
                agent = default_agent(task.contract)
            self.agents[key] = agent
        return agent

    def runnable(self) -> list[SwarmTask]:
        tasks = self.dag.tasks
        return [tasks[tid] for tid in self.dag.order
                if tasks[tid].status is TaskStatus.PENDING
                and all(tasks[d].status is TaskStatus.DONE for d in tasks[tid].deps)]

    def execute(self, task: SwarmTask) -> SubAgentResult:
        with self.state_lock:
            task.status = TaskStatus.RUNNING
            incoming = [self.artifacts[d] for d in task.deps if d in self.artifacts]
        self.emit("task_start", {"task": task.id, "contract": task.contract, "read_only": task.read_only,
                                 "attempt": task.retries + 1})
        try:
            failure = three_gates(task, self.registry, self.tracker, incoming, on_event=self.emit)
            if failure is not None:
                self.emit("gate_failure", {"task": task.id, **failure.to_json()})
                return SubAgentResult(failure.status, "", BudgetVector(), f"gate{failure.gate}",
                                      budget_exceeded=self.tracker.exceeded, warnings=failure.reasons)
            if incoming and task.id not in self.handed_off:
                cost = BudgetVector(handoffs=len(incoming))
                ok = self.tracker.admit(cost)
                self.emit("admit", {"task": task.id, "cost": cost.to_list(), "ok": ok, "scope": "swarm"})
                if not ok:
                    return SubAgentResult(SubAgentStatus.BUDGET_EXCEEDED, "", BudgetVector(), "budget",
                                          budget_exceeded=True)
                self.handed_off.add(task.id)
            context = "\n".join(a.summary for a in incoming)
            return run_subagent(self.registry[task.contract], task.description or self.text, context,
                                self.backend_for(task), parent=self.tracker, producer=task.id,
                                parents=[a.id for a in incoming], on_event=self.emit,
                                wall_clock_timeout=self.wall_clock_timeout)
        finally:
            self.emit("task_end", {"task": task.id})

    # Caller holds state_lock.
    def process(self, task: SwarmTask, result: SubAgentResult) -> None:
        self.results.setdefault(task.id, []).append(result)
        if result.ok:
            task.status = TaskStatus.DONE
            self.artifacts[task.id] = result.artifacts[0]
            self.emit("task_done", {"task": task.id, "artifact": result.artifacts[0].id})
            return
        # Gate rejections are structural; retrying cannot fix them.
        can_retry = (task.retries < MAX_RETRIES and not self.tracker.exceeded
                     and self.tracker.remaining.retries >= 1
                     and not (result.error_category or "").startswith("gate"))
        kind = self.policy(result.status, can_retry, task) or InterventionKind.SKIP
        if kind in (InterventionKind.RETRY_SAME, InterventionKind.RETRY_DIFFERENT) and not can_retry:
            kind = InterventionKind.SKIP
        self.trail.append(InterventionRecord(task.id, result.status, kind, task.retries + 1, can_retry))
        self.emit("intervention", {"task": task.id, "status": result.status.value, "intervention": kind.value,
                                   "can_retry": can_retry})
        if kind in (InterventionKind.RETRY_SAME, InterventionKind.RETRY_DIFFERENT):
            ok = self.tracker.admit(BudgetVector(retries=1))
            self.emit("admit", {"task": task.id, "cost": BudgetVector(retries=1).to_list(), "ok": ok,
                                "scope": "swarm"})
            if not ok:
                task.status = TaskStatus.SKIPPED
                return
            task.retries += 1
            if kind is InterventionKind.RETRY_DIFFERENT:
                task.contract = self._alternative_contract(task)
            task.status = TaskStatus.PENDING
        elif kind is InterventionKind.REPLAN:
            self._replan(task)
        elif kind is InterventionKind.ABORT:
            task.status = TaskStatus.FAILED
            self.aborted = True
        else:
            task.status = TaskStatus.SKIPPED

    def _alternative_contract(self, task: SwarmTask) -> str:
        """Next built-in factory with the same read-only class."""
        kinds = [k for k in FACTORY_KINDS if k in self.registry]
        start = kinds.index(task.contract) if task.contract in kinds else -1
        for offset in range(1, len(kinds) + 1):
            cand = kinds[(start + offset) % len(kinds)]
            if cand != task.contract and self.registry[cand].read_only == task.read_only:
                return cand
        return task.contract

    def _replan(self, task: SwarmTask) -> None:
        """Replace the failed task with a freshly detected chain; completed work is kept."""
        self.replans += 1
        tasks = self.dag.tasks
        task.status = TaskStatus.SKIPPED
        prev: tuple[str, ...] = task.deps
        new_ids = []
        for i, kind in enumerate(detect_pipeline(task.description or self.text)):
            tid = f"{task.id}.r{self.replans}.{i}-{kind.lower()}"
            contract = self.registry.get(kind)
            tasks[tid] = SwarmTask(tid, kind, task.description, prev, contract.read_only if contract else False)
            self.results[tid] = []
            new_ids.append(tid)
            prev = (tid,)
        for other in tasks.values():
            if task.id in other.deps and other.status is TaskStatus.PENDING:
                other.deps = tuple(prev[0] if d == task.id else d for d in other.deps)
        edges = [(d, t.id) for t in tasks.values() for d in t.deps]
        pos = self.dag.order.index(task.id)
        order = self.dag.order[:pos + 1] + tuple(new_ids) + self.dag.order[pos + 1:]
        self.dag = TaskDag(tasks, tuple(edges), order, self.dag.build_ops)

    def round(self, pool: ThreadPoolExecutor | None) -> bool:
        """One scheduler round; ``False`` when nothing is runnable."""
        ready = self.runnable()
        if not ready:
            return False
        parallel = [t for t in ready if t.read_only]
        serial = [t for t in ready if not t.read_only]
        if len(parallel) >= 2 and pool is not None:
            results = list(pool.map(self.execute, parallel))
            with self.state_lock:
                self.emit("merge_begin", {"tasks": [t.id for t in parallel]})
                for t, r in zip(parallel, results):
                    self.process(t, r)
                self.emit("merge_end", {"tasks": [t.id for t in parallel]})
        else:
            # A lone read-only task runs on the serial lane.
            serial = parallel + serial
        if serial and not self.aborted:
            first = serial[0]
            r = self.execute(first)
            with self.state_lock:
                self.process(first, r)
        return True


def run_swarm(dag: TaskDag, swarm_budget: BudgetVector | None = None, policy: Policy = default_policy,
              backends: BackendSource = None, *, registry: Mapping[str, Contract] | None = None,
              cancel: threading.Event | None = None, max_workers: int | None = None, text: str = "",
              wall_clock_timeout: float | None = None) -> SwarmRun:
    """Verify the delegation forest, then schedule the DAG until nothing is runnable.

    Read-only tasks that become runnable together run concurrently and are
    merged under one lock; at most one write-capable task runs per round.
    """
    registry = default_registry() if registry is None else registry
    budget = recommended_swarm_budget(dag, registry) if swarm_budget is None else swarm_budget
    trace: list[TraceEvent] = []
    t0 = time.perf_counter()
    report = verify_conservation(delegation_forest(dag, budget, registry))
    trace.append(TraceEvent(0.0, None, "precheck", {"ok": report.ok,
                                                    "violations": [v.to_json() for v in report.violations]}))
    work = dag.fresh()
    if not report.ok:
        return SwarmRun(SwarmStatus.REFUSED, budget, report, work.tasks, trace=trace)

    tracker = BudgetTracker(budget, name=SWARM_NODE)
    sup = _Supervisor(work, tracker, registry, policy, backends, text, wall_clock_timeout, trace, t0)
    status = SwarmStatus.EXECUTING
    workers = max_workers or max(2, min(8, len(work)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        while True:
            if cancel is not None and cancel.is_set():
                status = SwarmStatus.CANCELLED
                break
            if tracker.exceeded:
                status = SwarmStatus.BUDGET_EXCEEDED
                break
            if not sup.round(pool) or sup.aborted:
                break
    work = sup.dag
    for t in work.tasks.values():
        if t.status is TaskStatus.PENDING:
            t.status = TaskStatus.SKIPPED
            sup.emit("blocked", {"task": t.id})
    if status is SwarmStatus.EXECUTING:
        all_done = all(t.status is TaskStatus.DONE for t in work.tasks.values()
                       if not any(r.kind is InterventionKind.REPLAN and r.task == t.id for r in sup.trail))
        status = SwarmStatus.COMPLETED if all_done and not sup.aborted else SwarmStatus.FAILED
    sup.emit("swarm_end", {"status": status.value, "usage": tracker.used.to_list()})
    return SwarmRun(status, budget, report, work.tasks, sup.artifacts, sup.results, sup.trail, trace, tracker.used)
