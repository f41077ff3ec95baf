"""Shipped agent scripts whose outputs satisfy each built-in contract's completion predicate."""

from __future__ import annotations

import json
from collections.abc import Iterable

from rgao.budget import BudgetVector
from rgao.swarm.agent import Fault, SimulatedAgent, Step, final_step, tool_step

DEFAULT_TASK_TOKENS = 2000
TOOL_SECONDS = 1

_SCRIPTS: dict[str, tuple[tuple[str, str], tuple[str, str], str]] = {
    "Researcher": (("search_code", "3 candidate modules"), ("read_file", "module source"),
                   "findings: the entry point and its two collaborators"),
    "Planner": (("read_file", "module source"), ("plan_update", "draft plan saved"),
                json.dumps({"plan": ["locate", "change", "verify"]})),
    "Coder": (("read_file", "module source"), ("edit_file", "2 hunks applied"),
              "Modified 2 files and applied the requested change."),
    "Tester": (("read_file", "existing tests"), ("write_file", "test file written"),
               "4 tests passed"),
    "Reviewer": (("read_file", "diff under review"), ("note", "review notes saved"),
                 json.dumps({"issues": []})),
    "Diagnostician": (("run_shell", "traceback captured"), ("read_file", "failing module"),
                      "root cause: loop bound is off by one"),
}


def script_steps(kind: str, tokens: int = DEFAULT_TASK_TOKENS) -> list[Step]:
    """Two tool calls and a final answer, splitting ``tokens`` 40/30/30."""
    (t1, o1), (t2, o2), final = _SCRIPTS.get(kind, _SCRIPTS["Coder"])
    first, second = tokens * 4 // 10, tokens * 3 // 10
    cost = BudgetVector(seconds=TOOL_SECONDS)
    return [tool_step(t1, o1, first, cost), tool_step(t2, o2, second, cost),
            final_step(final, tokens - first - second)]


def default_agent(kind: str, tokens: int = DEFAULT_TASK_TOKENS, faults: Iterable[Fault] = ()) -> SimulatedAgent:
    return SimulatedAgent(script_steps(kind, tokens), faults)
