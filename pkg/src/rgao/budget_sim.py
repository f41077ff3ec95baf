"""Randomised execution of delegation forests under fault injection.

Used to exercise the conservation property: every agent spends only through
its own :class:`~rgao.budget.BudgetTracker`, retries and replans reuse the
same trackers, and the total spend across the forest is compared with the
root budget.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from rgao.budget import (
    BudgetTracker,
    BudgetVector,
    DelegationForest,
    DelegationNode,
    osum,
)

INTERVENTIONS = ("RetrySame", "RetryDifferent", "Replan", "Skip", "Abort")


class _Aborted(Exception):
    pass


@dataclass
class SimulationOutcome:
    total_used: BudgetVector
    used_by_node: dict[str, BudgetVector]
    interventions: list[tuple[str, str]] = field(default_factory=list)
    refusals: int = 0
    aborted: bool = False


def random_cost(rng: random.Random, scale: BudgetVector) -> BudgetVector:
    return BudgetVector.of(rng.randint(0, max(1, s // 3)) if rng.random() < 0.7 else 0
                           for s in scale)


def random_verified_forest(rng: random.Random, max_nodes: int = 12,
                           max_children: int = 3) -> DelegationForest:
    """Grow a forest top-down so that every node satisfies the delegation constraint."""
    root_budget = BudgetVector.of(rng.randint(0, 60) * m for m in (1, 2, 1000, 10, 1, 1))
    nodes: dict[str, DelegationNode] = {}
    pending = [("n0", root_budget)]
    counter = 1
    while pending:
        nid, budget = pending.pop()
        remaining = list(budget)
        direct = [rng.randint(0, r // 4) if r else 0 for r in remaining]
        remaining = [r - d for r, d in zip(remaining, direct)]
        children: list[str] = []
        n_children = rng.randint(0, max_children) if counter < max_nodes else 0
        for _ in range(n_children):
            if counter >= max_nodes:
                break
            share = [rng.randint(0, r) if r else 0 for r in remaining]
            if rng.random() < 0.3:
                share = list(remaining)
            remaining = [r - s for r, s in zip(remaining, share)]
            cid = f"n{counter}"
            counter += 1
            children.append(cid)
            pending.append((cid, BudgetVector.of(share)))
        nodes[nid] = DelegationNode(nid, budget, BudgetVector.of(direct), tuple(children))
    return DelegationForest(nodes.values())


class ForestSimulator:
    """Drive one randomised trajectory over a verified delegation forest.

    ``chained=False`` gives each agent a tracker limited to the headroom its
    budget leaves after reserving the children's budgets (local enforcement,
    the setting of the conservation argument).  ``chained=True`` links every
    tracker to its parent's pool instead, the way the swarm supervisor does.
    """

    def __init__(self, forest: DelegationForest, rng: random.Random, *,
                 chained: bool = False, max_attempts: int = 6,
                 max_total_attempts: int = 400) -> None:
        self.forest = forest
        self.attempts_left = max_total_attempts
        self.rng = rng
        self.chained = chained
        self.max_attempts = max_attempts
        self.trackers: dict[str, BudgetTracker] = {}
        self.outcome_log: list[tuple[str, str]] = []
        self.refusals = 0
        for root in forest.roots:
            self._make_trackers(root, None)

    def _make_trackers(self, nid: str, parent: BudgetTracker | None) -> None:
        node = self.forest[nid]
        if self.chained:
            tracker = BudgetTracker(node.budget, parent=parent, name=nid)
        else:
            reserved = osum(self.forest[c].budget for c in node.children)
            tracker = BudgetTracker(node.budget.headroom(reserved), name=nid)
        self.trackers[nid] = tracker
        for child in node.children:
            self._make_trackers(child, tracker)

    def run(self) -> SimulationOutcome:
        aborted = False
        try:
            for root in self.forest.roots:
                self._run_agent(root)
        except _Aborted:
            aborted = True
        used = {nid: t.used for nid, t in self.trackers.items()}
        if self.chained:
            total = osum(self.trackers[r].used for r in self.forest.roots)
        else:
            total = osum(used.values())
        return SimulationOutcome(total, used, self.outcome_log, self.refusals, aborted)

    def _attempt(self, nid: str) -> str:
        """One attempt of an agent's own work; returns the terminal status."""
        if self.attempts_left <= 0:
            raise _Aborted
        self.attempts_left -= 1
        node = self.forest[nid]
        tracker = self.trackers[nid]
        scale = node.budget
        steps = self.rng.randint(1, 8)
        fault_at = self.rng.randint(0, steps + 3)
        fault = self.rng.choice(("Timeout", "Error", "Failure"))
        delegate_at = self.rng.randint(0, steps)
        for step in range(steps):
            if step == delegate_at:
                for child in node.children:
                    self._run_agent(child)
            if step == fault_at:
                return fault
            if not tracker.admit(random_cost(self.rng, scale)):
                self.refusals += 1
                return "BudgetExceeded"
        if delegate_at >= steps:
            for child in node.children:
                self._run_agent(child)
        return "Success"

    def _run_agent(self, nid: str) -> None:
        for _attempt in range(self.max_attempts):
            status = self._attempt(nid)
            if status == "Success":
                return
            action = self.rng.choice(INTERVENTIONS)
            self.outcome_log.append((nid, action))
            if action == "Skip":
                return
            if action == "Abort":
                raise _Aborted
            if action == "Replan":
                for child in self.forest[nid].children:
                    self._run_agent(child)
            # RetrySame / RetryDifferent / Replan all loop back onto the same trackers.


def simulate(forest: DelegationForest, rng: random.Random, *,
             chained: bool = False, max_attempts: int = 6) -> SimulationOutcome:
    return ForestSimulator(forest, rng, chained=chained, max_attempts=max_attempts).run()
