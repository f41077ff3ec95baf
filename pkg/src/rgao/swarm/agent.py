"""Scripted agent backend and the guarded sub-agent execution loop."""

from __future__ import annotations

import threading
import time
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from rgao.budget import BudgetTracker, BudgetVector, osum
from rgao.contracts import (
    DEFAULT_TOOL_REGISTRY,
    Contract,
    OutputViolation,
    RiskTier,
    filter_tools,
    validate_output,
)
from rgao.swarm.artifacts import PRODUCED_KIND, SwarmArtifact, make_artifact
from rgao.swarm.chattiness import ChattinessDetector

EventSink = Callable[[str, Mapping[str, Any]], None]


class SubAgentStatus(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    ERROR = "Error"
    TIMEOUT = "Timeout"
    BUDGET_EXCEEDED = "BudgetExceeded"


class FaultKind(str, Enum):
    TIMEOUT = "timeout"
    ERROR = "error"


class SimulatedTimeout(Exception):
    pass


class SimulatedToolError(Exception):
    pass


class ToolDeniedError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class ToolCall:
    name: str
    output: str = ""
    cost: BudgetVector = field(default_factory=BudgetVector)


@dataclass(frozen=True, slots=True)
class Step:
    """One model response: tool calls, or a final answer when ``calls`` is empty."""

    tokens: int = 0
    calls: tuple[ToolCall, ...] = ()
    output: str = ""

    @property
    def is_final(self) -> bool:
        return not self.calls


def tool_step(name: str, output: str = "", tokens: int = 0, cost: BudgetVector | None = None) -> Step:
    return Step(tokens, (ToolCall(name, output, cost or BudgetVector()),))


def final_step(output: str, tokens: int = 0) -> Step:
    return Step(tokens, (), output)


@dataclass(frozen=True, slots=True)
class Fault:
    """Raise at ``step`` during the first ``attempts`` runs of the script."""

    kind: FaultKind
    step: int
    attempts: int = 1


class SimulatedAgent:
    """A finite deterministic script standing in for the model.

    ``loop=(k, n)`` repeats step ``k`` ``n`` extra times.  The attempt counter
    lets injected faults fire on early runs only, so retries can succeed.
    """

    def __init__(self, steps: Sequence[Step], faults: Iterable[Fault] = (),
                 loop: tuple[int, int] | None = None) -> None:
        script = list(steps)
        if loop is not None:
            k, n = loop
            if not 0 <= k < len(script) or n < 0:
                raise ValueError("loop must name an existing step and a non-negative count")
            script[k + 1:k + 1] = [script[k]] * n
        self.steps: tuple[Step, ...] = tuple(script)
        self.faults = tuple(faults)
        self.attempts = 0
        self._lock = threading.Lock()

    def begin(self) -> int:
        with self._lock:
            self.attempts += 1
            return self.attempts

    def step_tokens(self, index: int) -> int:
        return self.steps[index].tokens if index < len(self.steps) else 0

    def invoke(self, index: int, attempt: int, messages: Sequence[tuple[str, str]] = ()) -> Step:
        for f in self.faults:
            if f.step == index and attempt <= f.attempts:
                if f.kind is FaultKind.TIMEOUT:
                    raise SimulatedTimeout(f"injected timeout at step {index}")
                raise SimulatedToolError(f"injected error at step {index}")
        if index >= len(self.steps):
            return final_step("")
        return self.steps[index]

    def total_tokens(self) -> int:
        return sum(s.tokens for s in self.steps)


@dataclass(frozen=True)
class SubAgentResult:
    status: SubAgentStatus
    output: str
    usage: BudgetVector
    error_category: str | None = None
    violations: tuple[OutputViolation, ...] = ()
    artifacts: tuple[SwarmArtifact, ...] = ()
    iterations: int = 0
    chatty: bool = False
    budget_exceeded: bool = False
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.status is SubAgentStatus.BUDGET_EXCEEDED and not self.budget_exceeded:
            raise ValueError("BudgetExceeded requires the tracker's exceeded flag")

    @property
    def ok(self) -> bool:
        return self.status is SubAgentStatus.SUCCESS

    def to_json(self) -> dict[str, Any]:
        return {"status": self.status.value, "output": self.output, "usage": self.usage.to_list(),
                "error_category": self.error_category,
                "violations": [{"kind": v.kind, "detail": v.detail} for v in self.violations],
                "artifacts": [a.id for a in self.artifacts], "iterations": self.iterations,
                "chatty": self.chatty, "warnings": list(self.warnings)}


def _trim_context(context: str, fraction: float) -> str:
    return context[: int(len(context) * fraction)] if fraction < 1.0 else context


def run_subagent(contract: Contract, task: str, context: str, backend: SimulatedAgent, *,
                 parent: BudgetTracker | None = None, producer: str | None = None,
                 parents: Iterable[str] = (), on_event: EventSink | None = None,
                 wall_clock_timeout: float | None = None,
                 tool_registry: Mapping[str, RiskTier] = DEFAULT_TOOL_REGISTRY) -> SubAgentResult:
    """Run one scripted agent under its contract's budget and the chattiness guard.

    Each iteration admits one iteration plus the response's tokens before the
    model is invoked; tool calls and their costs are admitted before they run.
    """
    emit = on_event or (lambda _e, _d: None)
    producer = producer or contract.name
    trk = BudgetTracker(contract.budget, parent, name=producer)
    det = ChattinessDetector()
    tools = filter_tools(contract.tools, contract.max_risk, tool_registry).tools
    messages = [("system", contract.instructions), ("human", task)]
    if context:
        messages.append(("context", _trim_context(context, contract.context_fraction)))
    attempt = backend.begin()
    started = time.monotonic()

    output = ""
    finished = refused = False
    failure: tuple[SubAgentStatus, str, str] | None = None  # status, category, message
    index = 0
    while not trk.exceeded and not det.is_chatty:
        if wall_clock_timeout is not None and time.monotonic() - started > wall_clock_timeout:
            failure = (SubAgentStatus.TIMEOUT, "timeout", "wall-clock timeout")
            break
        cost = BudgetVector(iterations=1, tokens=backend.step_tokens(index))
        ok = trk.admit(cost)
        emit("admit", {"task": producer, "cost": cost.to_list(), "ok": ok})
        if not ok:
            refused = True
            break
        try:
            resp = backend.invoke(index, attempt, messages)
        except SimulatedTimeout as exc:
            failure = (SubAgentStatus.TIMEOUT, "timeout", str(exc))
            break
        except SimulatedToolError as exc:
            failure = (SubAgentStatus.ERROR, "tool_error", str(exc))
            break
        index += 1
        if resp.is_final:
            output = resp.output
            finished = True
            break
        denied = [c.name for c in resp.calls if c.name not in tools]
        if denied:
            failure = (SubAgentStatus.ERROR, "permission", f"tools not permitted: {denied}")
            break
        call_cost = osum([BudgetVector(tool_calls=len(resp.calls))] + [c.cost for c in resp.calls])
        ok = trk.admit(call_cost)
        emit("admit", {"task": producer, "cost": call_cost.to_list(), "ok": ok})
        if not ok:
            refused = True
            break
        det.record_action([c.name for c in resp.calls])
        det.record_output([c.output for c in resp.calls])
        output = resp.calls[-1].output
        messages.append(("tool", output))

    valid, violations = validate_output(output, contract.kappa)
    chatty = det.is_chatty and not finished
    warnings: list[str] = []
    if failure is not None:
        status, category, message = failure
        warnings.append(message)
    elif refused or (trk.exceeded and not finished):
        status, category = SubAgentStatus.BUDGET_EXCEEDED, "budget"
    elif chatty:
        status, category = SubAgentStatus.FAILURE, "chattiness"
        violations = [*violations, OutputViolation("chattiness", "repeated tool calls or outputs")]
        warnings.append("chattiness detected; loop stopped")
    elif not valid:
        status, category = SubAgentStatus.FAILURE, "validation"
    else:
        status, category = SubAgentStatus.SUCCESS, None

    artifacts: tuple[SwarmArtifact, ...] = ()
    if status is SubAgentStatus.SUCCESS:
        kind = PRODUCED_KIND.get(contract.name, "TaskBrief")
        data = {"contract": contract.name, "output": output, "task": task}
        artifacts = (make_artifact(kind, output[:200], data, producer, parents),)
    return SubAgentResult(status, output, trk.used, category, tuple(violations), artifacts, trk.used.iterations,
                          chatty, trk.exceeded, tuple(warnings))
