"""Microbenchmarks reported as median and median absolute deviation over fixed rounds."""

from __future__ import annotations

import gc
import platform
import statistics
import sys
import tempfile
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any

from rgao.budget import BudgetTracker, BudgetVector
from rgao.codeindex import build_index, generate_preset, summarize
from rgao.contracts import FACTORY_KINDS, default_registry
from rgao.retrieval import retrieve
from rgao.router import ComplexityVector, extract_complexity, route
from rgao.swarm import build_dag

ROUNDS = 20
WARMUP = 3
BENCH_QUERY = "compute billing tokens score"
BUDGET_CHECKS_PER_ROUND = 1000


@dataclass
class BenchResult:
    name: str
    rounds: int
    median: float
    mad: float
    unit: str
    samples: list[float] = field(default_factory=list)
    environment: str = ""

    @classmethod
    def from_samples(cls, name: str, samples: list[float], unit: str) -> BenchResult:
        med = statistics.median(samples)
        mad = statistics.median(abs(s - med) for s in samples)
        env = f"python {sys.version.split()[0]} on {platform.machine()} {platform.system()}"
        return cls(name, len(samples), med, mad, unit, samples, env)

    def to_json(self) -> dict[str, Any]:
        return {"name": self.name, "rounds": self.rounds, "median": self.median, "mad": self.mad,
                "unit": self.unit, "samples": self.samples, "environment": self.environment}

    def __str__(self) -> str:
        return f"{self.name}: {self.median:.4g} ± {self.mad:.2g} {self.unit} (n={self.rounds})"


_SCALE = {"s": 1.0, "ms": 1e3, "us": 1e6}


@contextmanager
def _quiet_gc() -> Iterator[None]:
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def measure(name: str, op: Callable[[], object], *, unit: str = "ms", rounds: int = ROUNDS,
            warmup: int = WARMUP, per_round: int = 1, setup: Callable[[], object] | None = None) -> BenchResult:
    """Time ``op`` ``rounds`` times after ``warmup`` untimed runs; ``per_round`` divides each sample."""
    for _ in range(warmup):
        if setup is not None:
            setup()
        op()
    samples = []
    with _quiet_gc():
        for _ in range(rounds):
            if setup is not None:
                setup()
            t = time.perf_counter()
            op()
            samples.append((time.perf_counter() - t) * _SCALE[unit] / per_round)
    return BenchResult.from_samples(name, samples, unit)


def _bench_dag(rounds: int) -> BenchResult:
    names = [FACTORY_KINDS[i % len(FACTORY_KINDS)] for i in range(20)]
    registry = default_registry()
    return measure("dag_build", lambda: build_dag(names, registry), rounds=rounds)


def _bench_budget(rounds: int) -> BenchResult:
    cost = BudgetVector(tokens=1)
    state: dict[str, BudgetTracker] = {}

    def setup() -> None:
        state["t"] = BudgetTracker(BudgetVector(10**9, 10**9, 10**12, 10**9, 10**9, 10**9))

    def op() -> None:
        admit = state["t"].admit
        for _ in range(BUDGET_CHECKS_PER_ROUND):
            admit(cost)

    return measure("budget_check", op, unit="us", rounds=rounds, per_round=BUDGET_CHECKS_PER_ROUND, setup=setup)


def _bench_contracts(rounds: int) -> BenchResult:
    return measure("contract_factory", default_registry, rounds=rounds)


def _bench_tree(rounds: int) -> BenchResult:
    with tempfile.TemporaryDirectory(prefix="rgao-bench-") as tmp:
        generate_preset("bench-200", tmp)
        return measure("tree_index", lambda: build_index(tmp), rounds=rounds)


def _bench_retrieval_like(name: str, rounds: int) -> BenchResult:
    with tempfile.TemporaryDirectory(prefix="rgao-bench-") as tmp:
        generate_preset("bench-200", tmp)
        tree = summarize(build_index(tmp))
        result = retrieve(tree, BENCH_QUERY)
        if name == "retrieval":
            return measure(name, lambda: retrieve(tree, BENCH_QUERY), rounds=rounds)
        return measure(name, lambda: extract_complexity(tree, result), rounds=rounds)


def _bench_routing(rounds: int) -> BenchResult:
    c = ComplexityVector(4, 6, 18, 4, 0.8)
    paths = ("src/billing/tokens.py", "src/auth/session.py")
    return measure("routing", lambda: route(c, 0.2, paths=paths), rounds=rounds)


TARGETS: dict[str, Callable[[int], BenchResult]] = {
    "dag_build": _bench_dag,
    "tree_index": _bench_tree,
    "contract_factory": _bench_contracts,
    "budget_check": _bench_budget,
    "routing": _bench_routing,
    "retrieval": lambda r: _bench_retrieval_like("retrieval", r),
    "complexity": lambda r: _bench_retrieval_like("complexity", r),
}


def run_microbench(target: str, rounds: int = ROUNDS) -> BenchResult:
    try:
        runner = TARGETS[target]
    except KeyError:
        raise ValueError(f"unknown benchmark {target!r}; expected one of {sorted(TARGETS)}") from None
    return runner(rounds)
