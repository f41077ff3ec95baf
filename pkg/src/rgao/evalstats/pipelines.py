"""Five compound pipelines run end to end against scripted agents."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from rgao.budget import leq
from rgao.contracts import default_registry
from rgao.swarm import (
    Fault,
    FaultKind,
    InterventionKind,
    SimulatedAgent,
    SwarmStatus,
    build_dag,
    detect_pipeline,
    recommended_swarm_budget,
    run_swarm,
    script_steps,
)

TOKEN_TARGET = 6000
TOKEN_TOLERANCE = 0.20
# Share of a task's tokens spent on its first model call, which a fault at step 0 wastes.
_FIRST_CALL_SHARE = 0.4


@dataclass(frozen=True, slots=True)
class PipelineCase:
    name: str
    text: str
    expected: tuple[str, ...]
    fault: FaultKind | None = None
    fault_task: int = 0


PIPELINES = (
    PipelineCase("research-code", "research the API then implement it", ("Researcher", "Coder")),
    PipelineCase("plan-code-test", "plan the migration, implement it, then test it",
                 ("Planner", "Coder", "Tester"), FaultKind.TIMEOUT, 1),
    PipelineCase("code-test-review", "implement the parser, test it and review the change",
                 ("Coder", "Tester", "Reviewer")),
    PipelineCase("diagnose-fix", "diagnose the crash and fix it", ("Diagnostician", "Coder"),
                 FaultKind.ERROR, 0),
    PipelineCase("code-test", "fix the bug then add tests", ("Coder", "Tester")),
)


@dataclass
class PipelineRow:
    name: str
    expected: list[str]
    detected: list[str]
    sequence_ok: bool
    dag_ok: bool
    gates_ok: bool
    status: str
    retry_same: int
    recovered: bool
    budget_ok: bool
    tokens: int
    tokens_ok: bool
    usage: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.sequence_ok and self.dag_ok and self.gates_ok and self.status == SwarmStatus.COMPLETED.value
                and self.recovered and self.budget_ok and self.tokens_ok)

    def to_json(self) -> dict[str, Any]:
        return {**self.__dict__, "passed": self.passed}


@dataclass
class PipelineReport:
    rows: list[PipelineRow]

    @property
    def completed(self) -> int:
        return sum(r.status == SwarmStatus.COMPLETED.value for r in self.rows)

    def to_json(self) -> dict[str, Any]:
        return {"completed": self.completed, "total": len(self.rows),
                "mean_tokens": sum(r.tokens for r in self.rows) / len(self.rows),
                "pipelines": [r.to_json() for r in self.rows]}

    def format_table(self) -> str:
        lines = [f"{'Pipeline':<18} {'Sequence':<34} {'Status':<10} {'Retry':>5} {'Tokens':>7} {'OK':>4}"]
        for r in self.rows:
            lines.append(f"{r.name:<18} {'->'.join(r.detected):<34} {r.status:<10} {r.retry_same:>5} "
                         f"{r.tokens:>7} {'yes' if r.passed else 'no':>4}")
        lines.append(f"completed {self.completed}/{len(self.rows)}")
        return "\n".join(lines)


def per_task_tokens(n_tasks: int, injected: bool, target: int = TOKEN_TARGET) -> int:
    """Script size so a pipeline, including one wasted first call when faulted, lands on ``target``."""
    return round(target / (n_tasks + (_FIRST_CALL_SHARE if injected else 0.0)))


def run_pipeline(case: PipelineCase, tier: str = "standard") -> PipelineRow:
    registry = default_registry(tier)
    detected = detect_pipeline(case.text)
    dag = build_dag(detected, registry, description=case.text)
    ids = list(dag.tasks)
    chain_edges = tuple(zip(ids, ids[1:]))
    dag_ok = len(dag) == len(detected) and dag.edges == chain_edges and dag.order == tuple(ids)
    tokens = per_task_tokens(len(ids), case.fault is not None)
    backends = {}
    for i, tid in enumerate(ids):
        faults = [Fault(case.fault, 0)] if case.fault is not None and i == case.fault_task else []
        backends[tid] = SimulatedAgent(script_steps(dag.tasks[tid].contract, tokens), faults)
    budget = recommended_swarm_budget(dag, registry)
    run = run_swarm(dag, budget, backends=backends, registry=registry, text=case.text)
    retry_same = len(run.interventions(InterventionKind.RETRY_SAME))
    gate_events = [e for e in run.trace if e.event == "gate"]
    used = run.usage.tokens
    return PipelineRow(
        name=case.name, expected=list(case.expected), detected=detected,
        sequence_ok=tuple(detected) == case.expected, dag_ok=dag_ok,
        gates_ok=bool(gate_events) and all(e.detail["ok"] for e in gate_events),
        status=run.status.value, retry_same=retry_same,
        recovered=retry_same == (1 if case.fault is not None else 0) and len(run.trail) == retry_same,
        budget_ok=leq(run.usage, budget), tokens=used,
        tokens_ok=abs(used - TOKEN_TARGET) <= TOKEN_TOLERANCE * TOKEN_TARGET,
        usage=run.usage.to_list())


def run_pipeline_suite(tier: str = "standard") -> PipelineReport:
    return PipelineReport([run_pipeline(case, tier) for case in PIPELINES])
