"""Leave-one-out ablation over the seven value signals."""

from __future__ import annotations

import math
from collections.abc import Callable, Collection, Sequence
from dataclasses import dataclass

from rgao.codeindex.model import CodeIndexTree
from rgao.retrieval.pipeline import retrieve
from rgao.retrieval.types import FEATURE_NAMES, FULL_MASK, SignalMask


@dataclass(frozen=True, slots=True)
class AblationRow:
    configuration: str
    mask: SignalMask
    ndcg_at_10: float
    mrr: float
    misroute_pct: float | None = None

    def to_json(self) -> dict:
        return {"configuration": self.configuration, "enabled": list(self.mask.enabled),
                "ndcg@10": self.ndcg_at_10, "mrr": self.mrr, "misroute_pct": self.misroute_pct}


def ndcg_at_k(ranked: Sequence[str], relevant: Collection[str], k: int = 10) -> float:
    """Binary-relevance nDCG@k."""
    if not relevant:
        return 0.0
    dcg = sum(1.0 / math.log2(i + 2) for i, nid in enumerate(ranked[:k]) if nid in relevant)
    ideal = sum(1.0 / math.log2(i + 2) for i in range(min(k, len(relevant))))
    return dcg / ideal


def reciprocal_rank(ranked: Sequence[str], relevant: Collection[str]) -> float:
    for i, nid in enumerate(ranked):
        if nid in relevant:
            return 1.0 / (i + 1)
    return 0.0


def ablation_masks() -> list[tuple[str, SignalMask]]:
    """The full mask followed by one mask per removed signal."""
    return [("All 7 signals", FULL_MASK)] + [(f"-{name}", SignalMask.without(name)) for name in FEATURE_NAMES]


def run_ablation(tree: CodeIndexTree, queries: Sequence[tuple[str, Collection[str]]], *, k: int = 10,
                 context_file: str | None = None,
                 misroute: Callable[[SignalMask], float] | None = None) -> list[AblationRow]:
    """Evaluate every ablation mask over labelled queries.

    ``misroute`` optionally maps a mask to a misrouting percentage.
    """
    if not queries:
        raise ValueError("ablation needs at least one labelled query")
    rows = []
    for label, mask in ablation_masks():
        ndcg = rr = 0.0
        for query, relevant in queries:
            ids = retrieve(tree, query, context_file, k, mask=mask, expand=False).ids
            ndcg += ndcg_at_k(ids, relevant, k)
            rr += reciprocal_rank(ids, relevant)
        rows.append(AblationRow(label, mask, ndcg / len(queries), rr / len(queries),
                                misroute(mask) if misroute is not None else None))
    return rows


def format_ablation_table(rows: Sequence[AblationRow]) -> str:
    lines = [f"{'Configuration':<16} {'nDCG@10':>8} {'MRR':>7} {'Misroute %':>11}"]
    for row in rows:
        mis = "n/a" if row.misroute_pct is None else f"{row.misroute_pct:.1f}"
        lines.append(f"{row.configuration:<16} {row.ndcg_at_10:>8.3f} {row.mrr:>7.3f} {mis:>11}")
    return "\n".join(lines)
