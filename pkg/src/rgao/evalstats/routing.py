"""Routing evaluation: keyword baseline versus the retrieval-driven router."""

from __future__ import annotations

import tempfile
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from rgao.codeindex import build_index, summarize
from rgao.evalstats.dataset import LABELS, RoutingInstance, materialize_repo
from rgao.evalstats.stats import McNemarResult, PairedOutcome, wilson_ci
from rgao.retrieval import FULL_MASK, SignalMask, retrieve
from rgao.router import RouterConfig, TopologyKind, extract_complexity, regex_route, route, touched_paths

BASELINE = "regex"
TREATMENT = "rgao"


@dataclass(frozen=True, slots=True)
class InstanceOutcome:
    id: str
    oracle: TopologyKind
    regex: TopologyKind
    rgao: TopologyKind
    adversarial: bool
    detail: dict[str, Any] = field(default_factory=dict)


@dataclass
class MethodStats:
    misroutes: int
    n: int
    ci: tuple[float, float]
    confusion: dict[str, dict[str, int]]

    @property
    def rate(self) -> float:
        return self.misroutes / self.n if self.n else 0.0

    def to_json(self) -> dict[str, Any]:
        return {"misroutes": self.misroutes, "n": self.n, "misroute_rate": self.rate,
                "wilson_95": list(self.ci), "confusion": self.confusion}


@dataclass
class RoutingReport:
    methods: dict[str, MethodStats]
    paired: PairedOutcome
    mcnemar: McNemarResult
    outcomes: list[InstanceOutcome]

    def to_json(self) -> dict[str, Any]:
        return {"methods": {k: v.to_json() for k, v in self.methods.items()},
                "paired": self.paired.to_json(), "mcnemar": self.mcnemar.to_json(),
                "n_eval": len(self.outcomes)}

    def format_table(self) -> str:
        lines = [f"{'Method':<8} {'Misroute':>9} {'95% Wilson CI':>18} {'n':>5}"]
        for name, m in self.methods.items():
            lo, hi = m.ci
            lines.append(f"{name:<8} {100 * m.rate:>8.1f}% {f'[{100 * lo:.1f}, {100 * hi:.1f}]':>18} {m.n:>5}")
        t = self.mcnemar
        lines.append(f"McNemar ({t.variant}): statistic={t.statistic:.3f} p={t.p_value:.3g} "
                     f"b={self.paired.baseline_only} c={self.paired.treatment_only}")
        return "\n".join(lines)


def route_instance(inst: RoutingInstance, config: RouterConfig, workdir: str | Path,
                   mask: SignalMask = FULL_MASK) -> InstanceOutcome:
    root = materialize_repo(inst.repo, Path(workdir) / inst.id)
    tree = summarize(build_index(root))
    result = retrieve(tree, inst.task, mask=mask)
    c = extract_complexity(tree, result)
    decision = route(c, result.ambiguity, config, touched_paths(tree, result))
    return InstanceOutcome(inst.id, inst.oracle, regex_route(inst.task).kind, decision.topology.kind,
                           inst.adversarial,
                           {"complexity": c.to_json(), "ambiguity": result.ambiguity,
                            "decided_by": decision.decided_by, "aggregate": decision.aggregate})


def _confusion(outcomes: Sequence[InstanceOutcome], method: str) -> dict[str, dict[str, int]]:
    table = {o.value: {p.value: 0 for p in LABELS} for o in LABELS}
    for out in outcomes:
        table[out.oracle.value][getattr(out, method).value] += 1
    return table


def summarize_outcomes(outcomes: Sequence[InstanceOutcome]) -> RoutingReport:
    methods = {}
    for name in (BASELINE, TREATMENT):
        wrong = sum(getattr(o, name) is not o.oracle for o in outcomes)
        n = len(outcomes)
        ci = wilson_ci(wrong, n) if n else (0.0, 1.0)
        methods[name] = MethodStats(wrong, n, ci, _confusion(outcomes, name))
    paired = PairedOutcome.from_flags([o.regex is o.oracle for o in outcomes],
                                      [o.rgao is o.oracle for o in outcomes])
    return RoutingReport(methods, paired, paired.test(), list(outcomes))


def eval_routing(dataset: Sequence[RoutingInstance], config: RouterConfig | None = None, *,
                 split: str = "eval", workers: int = 1, workdir: str | Path | None = None,
                 mask: SignalMask = FULL_MASK) -> RoutingReport:
    """Route every instance of ``split`` both ways; rates come from that split only."""
    config = config or RouterConfig()
    chosen = [inst for inst in dataset if inst.split == split]
    if not chosen:
        raise ValueError(f"dataset has no {split!r} instances")
    with tempfile.TemporaryDirectory(prefix="rgao-routing-") as tmp:
        base = Path(workdir) if workdir is not None else Path(tmp)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda i: route_instance(i, config, base, mask), chosen))
        else:
            outcomes = [route_instance(i, config, base, mask) for i in chosen]
    return summarize_outcomes(outcomes)
