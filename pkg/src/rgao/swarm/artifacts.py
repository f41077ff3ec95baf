"""Typed, checksummed handoff artifacts."""

from __future__ import annotations

import hashlib
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import Any

ARTIFACT_KINDS = ("TaskBrief", "RepoFindings", "ExecutionPlan", "TestReport", "ReviewReport", "DiagnosticReport")
# A task brief can be a bare summary; every other kind must carry data.
DATA_BEARING_KINDS = frozenset(ARTIFACT_KINDS) - {"TaskBrief"}

# Artifact kind emitted by each built-in contract.
PRODUCED_KIND = {
    "Researcher": "RepoFindings",
    "Planner": "ExecutionPlan",
    "Coder": "TaskBrief",
    "Tester": "TestReport",
    "Reviewer": "ReviewReport",
    "Diagnostician": "DiagnosticReport",
}


class ArtifactError(ValueError):
    pass


def canonical_bytes(data: Any) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      allow_nan=False).encode("utf-8")


def digest(data: Any) -> str:
    return hashlib.sha256(canonical_bytes(data)).hexdigest()


@dataclass(frozen=True)
class SwarmArtifact:
    id: str
    kind: str
    summary: str
    data: Mapping[str, Any]
    producer: str
    sha256: str
    version: int = 1
    parent_artifact_ids: tuple[str, ...] = field(default=())

    def verify(self) -> bool:
        try:
            return digest(self.data) == self.sha256
        except (TypeError, ValueError):
            return False

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "kind": self.kind, "summary": self.summary, "data": self.data,
                "producer": self.producer, "version": self.version, "sha256": self.sha256,
                "parent_artifact_ids": list(self.parent_artifact_ids)}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> SwarmArtifact:
        return cls(id=obj["id"], kind=obj["kind"], summary=obj["summary"], data=obj["data"],
                   producer=obj["producer"], sha256=obj["sha256"], version=int(obj.get("version", 1)),
                   parent_artifact_ids=tuple(obj.get("parent_artifact_ids", ())))


def make_artifact(kind: str, summary: str, data: Mapping[str, Any], producer: str,
                  parents: Iterable[str] = (), version: int = 1) -> SwarmArtifact:
    if kind not in ARTIFACT_KINDS:
        raise ArtifactError(f"unknown artifact kind {kind!r}; expected one of {ARTIFACT_KINDS}")
    if kind in DATA_BEARING_KINDS and not data:
        raise ArtifactError(f"{kind} artifacts need a non-empty payload")
    sha = digest(data)
    return SwarmArtifact(f"{producer}:{kind}:v{version}:{sha[:12]}", kind, summary, data, producer, sha,
                         version, tuple(parents))


def handoff_violations(artifact: SwarmArtifact, known_producers: Iterable[str]) -> list[str]:
    """Everything wrong with an incoming artifact; empty when it may be consumed."""
    problems = []
    if artifact.producer not in set(known_producers):
        problems.append(f"unknown producer {artifact.producer!r}")
    if artifact.kind not in ARTIFACT_KINDS:
        problems.append(f"kind {artifact.kind!r} is outside the vocabulary")
    if artifact.kind in DATA_BEARING_KINDS and not artifact.data:
        problems.append(f"{artifact.kind} artifact has an empty payload")
    if not artifact.verify():
        problems.append("sha256 mismatch")
    return problems
