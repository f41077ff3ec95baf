"""Reciprocal rank fusion."""

from __future__ import annotations

from collections.abc import Sequence

from rgao.retrieval.types import RankedList

RRF_K = 60


def rrf_fuse(lists: Sequence[RankedList], k: int = RRF_K, *, system: str = "rrf") -> RankedList:
    """Fuse rankings by ``sum_s w_s / (k + rank_s(d))``; ties broken by node id."""
    if not lists:
        raise ValueError("rrf_fuse needs at least one ranked list")
    if k < 0:
        raise ValueError("k must be >= 0")
    fused: dict[str, float] = {}
    for ranked in lists:
        for rank, (nid, _score) in enumerate(ranked.items, start=1):
            fused[nid] = fused.get(nid, 0.0) + ranked.weight / (k + rank)
    return RankedList.from_scores(system, fused)
