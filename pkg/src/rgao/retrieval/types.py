"""Value types shared by the retrieval paths."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

FEATURE_NAMES: tuple[str, ...] = ("tfidf", "lang", "type", "ctx", "hub", "len", "pr")


class QueryType(str, Enum):
    IDENTIFIER = "identifier"
    EXACT = "exact"
    CONCEPTUAL = "conceptual"
    DEPENDENCY = "dependency"
    STRUCTURAL = "structural"


class RetrievalError(Exception):
    pass


class EmptyQueryError(RetrievalError, ValueError):
    pass


class NeedsSummariesError(RetrievalError):
    """Raised when a summary-guided path runs over an unsummarised tree."""


@dataclass(frozen=True, slots=True)
class RankedList:
    """One system's ranking: ``items[i]`` holds rank ``i + 1``."""

    system: str
    items: tuple[tuple[str, float], ...] = ()
    weight: float = 1.0

    def __post_init__(self) -> None:
        ids = [nid for nid, _ in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError(f"ranked list {self.system!r} has duplicate node ids")
        if self.weight < 0:
            raise ValueError("weight must be >= 0")

    @classmethod
    def from_scores(cls, system: str, scores: Mapping[str, float] | Iterable[tuple[str, float]],
                    k: int | None = None, weight: float = 1.0) -> RankedList:
        """Sort by score descending, ties by node id ascending, keep the top ``k``."""
        pairs = scores.items() if isinstance(scores, Mapping) else scores
        ordered = sorted(pairs, key=lambda p: (-p[1], p[0]))
        if k is not None:
            ordered = ordered[:k]
        return cls(system, tuple(ordered), weight)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [nid for nid, _ in self.items]

    def ranks(self) -> dict[str, int]:
        return {nid: i + 1 for i, (nid, _) in enumerate(self.items)}

    def top(self, k: int) -> RankedList:
        return RankedList(self.system, self.items[:k], self.weight)

    def to_json(self) -> dict[str, Any]:
        return {"system": self.system, "weight": self.weight,
                "items": [{"id": nid, "score": score} for nid, score in self.items]}


@dataclass(frozen=True, slots=True)
class SignalMask:
    """Which of the seven value signals are enabled, in FEATURE_NAMES order."""

    tfidf: bool = True
    lang: bool = True
    type: bool = True
    ctx: bool = True
    hub: bool = True
    len: bool = True
    pr: bool = True

    def __post_init__(self) -> None:
        if not any(self.flags):
            raise ValueError("at least one signal must be enabled")

    @property
    def flags(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)

    @property
    def enabled(self) -> tuple[str, ...]:
        return tuple(name for name in FEATURE_NAMES if getattr(self, name))

    @classmethod
    def all(cls) -> SignalMask:
        return cls()

    @classmethod
    def only(cls, names: Iterable[str]) -> SignalMask:
        names = set(names)
        unknown = names - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown signals: {sorted(unknown)}")
        return cls(**{n: n in names for n in FEATURE_NAMES})

    @classmethod
    def without(cls, name: str) -> SignalMask:
        if name not in FEATURE_NAMES:
            raise ValueError(f"unknown signal {name!r}")
        return cls(**{name: False})

    @classmethod
    def parse(cls, text: str) -> SignalMask:
        return cls.only(p.strip() for p in text.split(",") if p.strip())


FULL_MASK = SignalMask()


@dataclass(frozen=True, slots=True)
class RetrievedItem:
    id: str
    score: float
    expansion: bool = False
    signals: Mapping[str, float] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "score": self.score, "signals": dict(self.signals)}
        if self.expansion:
            out["expansion"] = True
        return out


@dataclass(frozen=True)
class RetrievalResult:
    query: str
    query_type: QueryType
    confidence: float
    strategy: str
    items: tuple[RetrievedItem, ...]
    ambiguity: float
    diagnostics: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        scores = [i.score for i in self.items]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("retrieval scores must be non-increasing")
        if not 0.0 <= self.ambiguity <= 1.0:
            raise ValueError("ambiguity must lie in [0, 1]")

    @property
    def ids(self) -> list[str]:
        return [i.id for i in self.items]

    @property
    def primary(self) -> tuple[RetrievedItem, ...]:
        return tuple(i for i in self.items if not i.expansion)

    def to_json(self) -> dict[str, Any]:
        return {
            "query": self.query, "query_type": self.query_type.value, "confidence": self.confidence,
            "strategy": self.strategy, "ambiguity": self.ambiguity,
            "results": [i.to_json() for i in self.items], "diagnostics": dict(self.diagnostics),
        }
