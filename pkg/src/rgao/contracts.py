"""Sub-agent contracts: instructions, budget, risk-filtered tools, and model choice."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from typing import Any

from rgao.budget import BudgetVector

logger = logging.getLogger(__name__)


class RiskTier(IntEnum):
    READ_ONLY = 0
    INTERNAL = 1
    WRITE = 2
    EXECUTE = 3

    @classmethod
    def parse(cls, value: str | int | RiskTier) -> RiskTier:
        if isinstance(value, RiskTier):
            return value
        if isinstance(value, int):
            return cls(value)
        return cls[value.strip().upper()]

    @property
    def label(self) -> str:
        return self.name.lower()


class OutputFormat(str, Enum):
    JSON = "json"
    TEXT = "text"


PRESET_TIERS: dict[str, BudgetVector] = {
    "tight": BudgetVector(5, 15, 10_000, 30, 1, 0),
    "standard": BudgetVector(15, 50, 100_000, 120, 2, 1),
    "generous": BudgetVector(30, 100, 500_000, 300, 5, 3),
}


class UnknownTierError(KeyError):
    pass


class UnknownContractError(KeyError):
    pass


class NoFeasibleModelError(LookupError):
    pass


def preset_budget(tier: str) -> BudgetVector:
    try:
        return PRESET_TIERS[tier]
    except KeyError:
        raise UnknownTierError(f"unknown budget tier {tier!r}; expected one of {sorted(PRESET_TIERS)}") from None


@dataclass(frozen=True, slots=True)
class CompletionPredicate:
    """kappa: rejection/acceptance keywords, verification stages, format, issue cap.

    ``max_issues=None`` means unbounded.
    """

    rejection_keywords: frozenset[str] = frozenset()
    acceptance_keywords: frozenset[str] = frozenset()
    verification_stages: tuple[str, ...] = ()
    output_format: OutputFormat = OutputFormat.TEXT
    max_issues: int | None = None

    def __post_init__(self) -> None:
        if self.max_issues is not None and self.max_issues < 0:
            raise ValueError("max_issues must be >= 0")
        if any(not s for s in self.verification_stages):
            raise ValueError("verification stage names must be non-empty")

    def to_json(self) -> dict[str, Any]:
        return {
            "K_r": sorted(self.rejection_keywords),
            "K_a": sorted(self.acceptance_keywords),
            "stages": list(self.verification_stages),
            "format": self.output_format.value,
            "max_issues": self.max_issues,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> CompletionPredicate:
        return cls(
            rejection_keywords=frozenset(obj.get("K_r", ())),
            acceptance_keywords=frozenset(obj.get("K_a", ())),
            verification_stages=tuple(obj.get("stages", ())),
            output_format=OutputFormat(obj.get("format", "text")),
            max_issues=obj.get("max_issues"),
        )


@dataclass(frozen=True, slots=True)
class Contract:
    name: str
    instructions: str
    kappa: CompletionPredicate
    budget: BudgetVector
    context_fraction: float = 1.0
    tools: frozenset[str] = frozenset()
    max_risk: RiskTier = RiskTier.INTERNAL
    model: str | None = None
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.context_fraction <= 1.0:
            raise ValueError(f"context_fraction must be in (0, 1], got {self.context_fraction}")

    @property
    def read_only(self) -> bool:
        return self.max_risk <= RiskTier.INTERNAL

    def with_budget(self, budget: BudgetVector) -> Contract:
        return replace(self, budget=budget)

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "instructions": self.instructions,
            "kappa": self.kappa.to_json(),
            "budget": self.budget.to_list(),
            "context_fraction": self.context_fraction,
            "tools": sorted(self.tools),
            "max_risk": self.max_risk.label,
            "model": {"name": self.model, "temperature": self.temperature},
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> Contract:
        model = obj.get("model") or {}
        return cls(
            name=obj["name"],
            instructions=obj.get("instructions", ""),
            kappa=CompletionPredicate.from_json(obj.get("kappa", {})),
            budget=BudgetVector.of(obj["budget"]),
            context_fraction=float(obj.get("context_fraction", 1.0)),
            tools=frozenset(obj.get("tools", ())),
            max_risk=RiskTier.parse(obj.get("max_risk", "internal")),
            model=model.get("name"),
            temperature=float(model.get("temperature", 0.0)),
        )


# -- tools --------------------------------------------------------------------

DEFAULT_TOOL_REGISTRY: Mapping[str, RiskTier] = {
    "read_file": RiskTier.READ_ONLY,
    "list_dir": RiskTier.READ_ONLY,
    "search_code": RiskTier.READ_ONLY,
    "fetch_symbol": RiskTier.READ_ONLY,
    "note": RiskTier.INTERNAL,
    "plan_update": RiskTier.INTERNAL,
    "write_file": RiskTier.WRITE,
    "edit_file": RiskTier.WRITE,
    "run_tests": RiskTier.EXECUTE,
    "run_shell": RiskTier.EXECUTE,
}


@dataclass
class ToolFilterResult:
    tools: frozenset[str]
    warnings: list[str] = field(default_factory=list)


def filter_tools(allowlist: Iterable[str], max_risk: RiskTier,
                 registry: Mapping[str, RiskTier] = DEFAULT_TOOL_REGISTRY) -> ToolFilterResult:
    """Allowlisted tools present in the registry at or below ``max_risk``.

    Allowlisted names missing from the registry are dropped with a warning.
    """
    kept = set()
    warnings = []
    for name in sorted(set(allowlist)):
        tier = registry.get(name)
        if tier is None:
            warnings.append(f"tool {name!r} is not in the registry; dropped")
            logger.warning("tool %r is not in the registry; dropped", name)
            continue
        if tier <= max_risk:
            kept.add(name)
    return ToolFilterResult(frozenset(kept), warnings)


def _tools_up_to(*tiers: RiskTier) -> frozenset[str]:
    return frozenset(n for n, t in DEFAULT_TOOL_REGISTRY.items() if t in tiers)


# -- factories ----------------------------------------------------------------

_R, _I, _W, _X = RiskTier.READ_ONLY, RiskTier.INTERNAL, RiskTier.WRITE, RiskTier.EXECUTE

_FACTORY_SPECS: dict[str, dict[str, Any]] = {
    "Coder": dict(
        instructions="Implement the requested change and report what was modified.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL", "cannot complete"}),
            verification_stages=("lint", "type-check", "test"),
        ),
        tiers=(_R, _I, _W, _X), max_risk=_X,
    ),
    "Researcher": dict(
        instructions="Locate the code relevant to the task and summarise findings.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL"}),
            acceptance_keywords=frozenset({"findings"}),
        ),
        tiers=(_R, _I), max_risk=_I,
    ),
    "Planner": dict(
        instructions="Produce an ordered execution plan for the task.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL"}),
            output_format=OutputFormat.JSON,
        ),
        tiers=(_R, _I), max_risk=_I,
    ),
    "Tester": dict(
        instructions="Write or update tests for the change and report results.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL"}),
            acceptance_keywords=frozenset({"passed"}),
            verification_stages=("test",),
        ),
        tiers=(_R, _I, _W), max_risk=_W,
    ),
    "Reviewer": dict(
        instructions="Review the change and list any issues found.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL"}),
            output_format=OutputFormat.JSON,
            max_issues=5,
        ),
        tiers=(_R, _I), max_risk=_I,
    ),
    "Diagnostician": dict(
        instructions="Reproduce the failure and identify its root cause.",
        kappa=CompletionPredicate(
            rejection_keywords=frozenset({"FATAL"}),
            acceptance_keywords=frozenset({"root cause"}),
        ),
        tiers=(_R, _I, _X), max_risk=_X,
    ),
}

FACTORY_KINDS: tuple[str, ...] = tuple(_FACTORY_SPECS)
DEFAULT_FACTORY_TIER = "standard"


def make_factory_contract(kind: str, tier: str = DEFAULT_FACTORY_TIER) -> Contract:
    try:
        spec = _FACTORY_SPECS[kind]
    except KeyError:
        raise UnknownContractError(f"unknown contract kind {kind!r}; expected one of {FACTORY_KINDS}") from None
    return Contract(
        name=kind,
        instructions=spec["instructions"],
        kappa=spec["kappa"],
        budget=preset_budget(tier),
        tools=_tools_up_to(*spec["tiers"]),
        max_risk=spec["max_risk"],
    )


def default_registry(tier: str = DEFAULT_FACTORY_TIER) -> dict[str, Contract]:
    """Contract registry holding the six built-in factories."""
    return {kind: make_factory_contract(kind, tier) for kind in FACTORY_KINDS}


# -- model routing ------------------------------------------------------------

CAPABILITIES = ("coding", "testing", "planning", "reasoning")


@dataclass(frozen=True, slots=True)
class SimulatedModel:
    name: str
    coding: float
    testing: float
    planning: float
    reasoning: float
    context_window: int

    def __post_init__(self) -> None:
        for cap in CAPABILITIES:
            if not 0.0 <= getattr(self, cap) <= 1.0:
                raise ValueError(f"{cap} score must be in [0, 1]")
        if self.context_window <= 0:
            raise ValueError("context_window must be positive")

    def score(self, task_kind: str) -> float:
        if task_kind not in CAPABILITIES:
            raise ValueError(f"unknown task kind {task_kind!r}")
        return getattr(self, task_kind)


DEFAULT_MODELS: tuple[SimulatedModel, ...] = (
    SimulatedModel("sim-large", 0.92, 0.88, 0.90, 0.93, 200_000),
    SimulatedModel("sim-medium", 0.85, 0.86, 0.80, 0.82, 128_000),
    SimulatedModel("sim-small", 0.70, 0.72, 0.65, 0.68, 32_000),
)


def route_model(task_kind: str, est_tokens: int,
                candidates: Sequence[SimulatedModel] = DEFAULT_MODELS) -> SimulatedModel:
    if not candidates:
        raise ValueError("route_model needs at least one candidate")
    feasible = [m for m in candidates if m.context_window >= est_tokens]
    if not feasible:
        raise NoFeasibleModelError(f"no candidate model has a context window >= {est_tokens}")
    return min(feasible, key=lambda m: (-m.score(task_kind), m.name))


# -- output validation --------------------------------------------------------


@dataclass(frozen=True, slots=True)
class OutputViolation:
    kind: str  # rejection_keyword | missing_acceptance | format | issue_count
    detail: str


def validate_output(output: str, kappa: CompletionPredicate) -> tuple[bool, list[OutputViolation]]:
    violations: list[OutputViolation] = []
    lowered = output.lower()
    for kw in sorted(kappa.rejection_keywords):
        if kw.lower() in lowered:
            violations.append(OutputViolation("rejection_keyword", kw))
    for kw in sorted(kappa.acceptance_keywords):
        if kw.lower() not in lowered:
            violations.append(OutputViolation("missing_acceptance", kw))
    if kappa.output_format is OutputFormat.JSON:
        try:
            payload = json.loads(output)
        except (TypeError, ValueError) as exc:
            violations.append(OutputViolation("format", f"output is not valid JSON: {exc}"))
        else:
            issues = payload.get("issues") if isinstance(payload, dict) else None
            if (kappa.max_issues is not None and isinstance(issues, list)
                    and len(issues) > kappa.max_issues):
                violations.append(OutputViolation(
                    "issue_count", f"{len(issues)} issues > max {kappa.max_issues}"))
    return not violations, violations
