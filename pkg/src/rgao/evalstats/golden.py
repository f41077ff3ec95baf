"""Fixed reference tables: chattiness scenarios and labelled retrieval queries."""

from __future__ import annotations

from rgao.codeindex.model import CodeIndexTree, NodeKind
from rgao.swarm.chattiness import GOLDEN_SCENARIOS, THRESHOLD, WINDOW, run_scenario

# (query, package, module noun); the relevant symbols are the module's handler
# class, its compute function and its loader.
ABLATION_QUERIES = (
    ("compute the auth tokens score", "auth", "tokens"),
    ("load cache handlers entry by key", "cache", "handlers"),
    ("billing models processing", "billing", "models"),
    ("parser views requests handler", "parser", "views"),
    ("router utils score", "router", "utils"),
    ("storage client entry loader", "storage", "client"),
    ("auth schema handle requests", "auth", "schema"),
    ("cache server score computation", "cache", "server"),
    ("billing loader key lookup", "billing", "loader"),
    ("parser codec item processing", "parser", "codec"),
)


def chattiness_table(window: int = WINDOW, threshold: int = THRESHOLD) -> list[dict]:
    rows = []
    for name, (steps, expected) in GOLDEN_SCENARIOS.items():
        detected = run_scenario(steps, window, threshold)
        rows.append({"scenario": name, "expected": expected, "detected": detected, "correct": detected == expected})
    return rows


def format_chattiness_table(rows: list[dict]) -> str:
    yn = {True: "Yes", False: "No"}
    lines = [f"{'Scenario':<16} {'Expected':>8} {'Detected':>8} {'Correct':>7}"]
    for r in rows:
        lines.append(f"{r['scenario']:<16} {yn[r['expected']]:>8} {yn[r['detected']]:>8} {yn[r['correct']]:>7}")
    return "\n".join(lines)


def ablation_ground_truth(tree: CodeIndexTree) -> list[tuple[str, frozenset[str]]]:
    """Labelled queries for a tree built from the synthetic benchmark generator."""
    out = []
    for query, pkg, noun in ABLATION_QUERIES:
        path = f"src/{pkg}/{noun}.py"
        wanted = {f"{pkg.title()}{noun.title()}Handler", f"compute_{pkg}_{noun}", f"load_{pkg}_{noun}"}
        relevant = frozenset(n.id for n in tree.nodes.values()
                             if n.kind is NodeKind.SYMBOL and n.path == path and n.name in wanted)
        if len(relevant) != len(wanted):
            raise ValueError(f"tree lacks the labelled symbols of {path}; build it from a bench preset")
        out.append((query, relevant))
    return out
