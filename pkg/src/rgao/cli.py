"""Command-line entry point: ``rgao <command> ...``.

Exit codes: 0 success, 1 domain failure (verification failed, threshold
breached, bad input file), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from rgao import __version__
from rgao.budget import BudgetError, DelegationForest, verify_conservation
from rgao.codeindex import (
    FORMAT_VERSION,
    CodeIndexError,
    build_index,
    generate_preset,
    load_index,
    save_index,
    summarize,
)
from rgao.contracts import PRESET_TIERS, default_registry
from rgao.retrieval import FULL_MASK, RetrievalError, SignalMask, format_ablation_table, retrieve, run_ablation
from rgao.router import RouterConfig, extract_complexity, regex_route, route, touched_paths

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

ENV_PREFIX = "RGAO_"
DEFAULT_INDEX = "rgao-index.json"


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


@dataclass(frozen=True)
class GlobalConfig:
    """Resolved global options; flags beat ``RGAO_*`` variables, which beat defaults."""

    config: str | None = None
    index: str = DEFAULT_INDEX
    format: str = "text"
    workers: int = 1
    seed: int = 0

    @classmethod
    def resolve(cls, ns: argparse.Namespace, env: os._Environ | dict[str, str]) -> GlobalConfig:
        def pick(name: str, default: Any) -> Any:
            value = getattr(ns, name, None)
            if value is None:
                value = env.get(ENV_PREFIX + name.upper())
            return default if value is None or value == "" else value

        fmt = "json" if getattr(ns, "json", False) else pick("format", "text")
        if fmt not in ("text", "json"):
            raise UsageError(f"format must be text or json, got {fmt!r}")
        try:
            workers, seed = int(pick("workers", 1)), int(pick("seed", 0))
        except ValueError as exc:
            raise UsageError(f"workers and seed must be integers: {exc}") from None
        if workers < 1:
            raise UsageError("workers must be >= 1")
        return cls(pick("config", None), str(pick("index", DEFAULT_INDEX)), fmt, workers, seed)


def _emit(g: GlobalConfig, payload: Any, text: str) -> None:
    if g.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _write_json(path: str, payload: Any) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _router_config(g: GlobalConfig, override: str | None = None) -> RouterConfig:
    path = override or g.config
    return RouterConfig.load(path) if path else RouterConfig()


def _index_and_text(g: GlobalConfig, args: list[str], what: str) -> tuple[str, str]:
    if len(args) == 1:
        return g.index, args[0]
    if len(args) == 2:
        return args[0], args[1]
    raise UsageError(f"expected [INDEX] {what}")


def _load_tree(path: str):
    if not Path(path).is_file():
        raise DomainError(f"index file not found: {path}")
    return load_index(path)


# -- index ---------------------------------------------------------------------


def cmd_index_build(g: GlobalConfig, ns: argparse.Namespace) -> int:
    if not Path(ns.path).is_dir():
        raise DomainError(f"not a directory: {ns.path}")
    tree = summarize(build_index(ns.path), ns.summaries)
    out = ns.out or g.index
    save_index(tree, out)
    stats = tree.stats.to_json()
    _emit(g, {"index": out, "stats": stats},
          f"wrote {out}: {stats['node_count']} nodes, {stats['edge_count']} edges "
          f"({stats['file_count']} files, {stats['symbol_count']} symbols)")
    return EXIT_OK


def cmd_index_stats(g: GlobalConfig, ns: argparse.Namespace) -> int:
    path = ns.file or g.index
    tree = _load_tree(path)
    stats = tree.stats.to_json()
    stats["summary_mode"] = tree.summary_mode
    lines = [f"{k}: {v}" for k, v in stats.items() if k != "warnings"]
    lines.append(f"warnings: {len(stats['warnings'])}")
    _emit(g, stats, "\n".join(lines))
    return EXIT_OK


def cmd_index_query(g: GlobalConfig, ns: argparse.Namespace) -> int:
    path, query = _index_and_text(g, ns.args, "QUERY")
    tree = _load_tree(path)
    mask = SignalMask.parse(ns.mask) if ns.mask else FULL_MASK
    result = retrieve(tree, query, ns.context, ns.k, mask=mask)
    payload = result.to_json()
    lines = [f"query type: {result.query_type.value} (confidence {result.confidence:.2f}), "
             f"ambiguity {result.ambiguity:.3f}"]
    for item in result.items:
        tag = " [1-hop]" if item.expansion else ""
        lines.append(f"{item.score:8.4f}  {item.id}{tag}")
    _emit(g, payload, "\n".join(lines))
    return EXIT_OK


# -- route / verify ------------------------------------------------------------


def cmd_route(g: GlobalConfig, ns: argparse.Namespace) -> int:
    config = _router_config(g, ns.router_config)
    if ns.repo:
        if len(ns.args) != 1:
            raise UsageError("with --repo give only the task text")
        if not Path(ns.repo).is_dir():
            raise DomainError(f"not a directory: {ns.repo}")
        tree, text = summarize(build_index(ns.repo)), ns.args[0]
    else:
        path, text = _index_and_text(g, ns.args, "TASK")
        tree = _load_tree(path)
    result = retrieve(tree, text)
    c = extract_complexity(tree, result)
    decision = route(c, result.ambiguity, config, touched_paths(tree, result))
    baseline = regex_route(text)
    payload = {"decision": decision.to_json(), "regex_baseline": str(baseline)}
    sig = ", ".join(f"{k}={v:.3f}" for k, v in decision.signals.items())
    _emit(g, payload, "\n".join([
        f"topology: {decision.topology} (decided by {decision.decided_by})",
        f"complexity: {c.as_tuple()}  ambiguity: {decision.ambiguity:.3f}  aggregate: {decision.aggregate:.3f}",
        f"signals: {sig}",
        f"triggered: {', '.join(decision.triggered_rules) or 'none'}",
        f"regex baseline: {baseline}",
    ]))
    return EXIT_OK


def cmd_verify_dag(g: GlobalConfig, ns: argparse.Namespace) -> int:
    try:
        forest = DelegationForest.load(ns.forest)
    except FileNotFoundError:
        raise DomainError(f"forest file not found: {ns.forest}") from None
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DomainError(f"malformed forest file {ns.forest}: {exc!r}") from None
    report = verify_conservation(forest)
    lines = [f"ok: {str(report.ok).lower()} ({report.nodes_visited} nodes, {report.edges_visited} edges)"]
    for v in report.violations:
        lines.append(f"violation at {v.node}: {v.dimension} composed {v.composed} > limit {v.limit}")
    _emit(g, report.to_json(), "\n".join(lines))
    return EXIT_OK if report.ok else EXIT_DOMAIN


# -- swarm -----------------------------------------------------------------------


def _parse_inject(spec: str, ids: list[str], contracts: list[str]) -> tuple[str, str]:
    from rgao.swarm import FaultKind

    kind, sep, target = spec.partition(":")
    if not sep or kind not in {k.value for k in FaultKind}:
        raise UsageError(f"--inject expects timeout:<task> or error:<task>, got {spec!r}")
    if target.isdigit() and int(target) < len(ids):
        return kind, ids[int(target)]
    if target in ids:
        return kind, target
    for tid, name in zip(ids, contracts):
        if name.lower() == target.lower():
            return kind, tid
    raise UsageError(f"--inject task {target!r} matches none of {ids}")


def cmd_swarm_run(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.swarm import (
        Fault,
        FaultKind,
        SimulatedAgent,
        SwarmStatus,
        build_dag,
        detect_pipeline,
        recommended_swarm_budget,
        run_swarm,
        script_steps,
    )

    registry = default_registry(ns.budget)
    dag = build_dag(detect_pipeline(ns.pipeline), registry, description=ns.pipeline)
    ids = list(dag.tasks)
    faults: dict[str, list[Fault]] = {}
    for spec in ns.inject or ():
        kind, tid = _parse_inject(spec, ids, [dag.tasks[t].contract for t in ids])
        faults.setdefault(tid, []).append(Fault(FaultKind(kind), 0))
    backends = {tid: SimulatedAgent(script_steps(dag.tasks[tid].contract, ns.tokens), faults.get(tid, ()))
                for tid in ids}
    budget = recommended_swarm_budget(dag, registry)
    run = run_swarm(dag, budget, backends=backends, registry=registry, text=ns.pipeline,
                    max_workers=g.workers)
    if ns.trace:
        _write_json(ns.trace, [e.to_json() for e in run.trace])
    chain = " -> ".join(dag.tasks[t].contract for t in ids)
    lines = [f"pipeline: {chain}", f"status: {run.status.value}",
             f"usage: {run.usage.to_list()} of budget {run.budget.to_list()}"]
    lines += [f"intervention: {r.kind.value} on {r.task} after {r.status.value}" for r in run.trail]
    _emit(g, run.to_json(), "\n".join(lines))
    return EXIT_OK if run.status is SwarmStatus.COMPLETED else EXIT_DOMAIN


# -- eval / bench ----------------------------------------------------------------


def cmd_eval_routing(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.evalstats import dump_jsonl, eval_routing, generate_routing_dataset, load_jsonl

    dataset = load_jsonl(ns.dataset) if ns.dataset else generate_routing_dataset(seed=g.seed, n=ns.n)
    if ns.out:
        dump_jsonl(dataset, ns.out)
    report = eval_routing(dataset, _router_config(g), split=ns.split, workers=g.workers)
    payload = report.to_json()
    if ns.report:
        _write_json(ns.report, payload)
    _emit(g, payload, report.format_table())
    rate = report.methods["rgao"].rate
    if ns.max_misroute is not None and rate > ns.max_misroute:
        print(f"misroute rate {rate:.3f} exceeds threshold {ns.max_misroute:.3f}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_eval_pipelines(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.evalstats import PIPELINES, run_pipeline_suite

    report = run_pipeline_suite(ns.budget)
    _emit(g, report.to_json(), report.format_table())
    return EXIT_OK if report.completed == len(PIPELINES) else EXIT_DOMAIN


def cmd_eval_chattiness(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.evalstats import chattiness_table, format_chattiness_table

    rows = chattiness_table(ns.window, ns.threshold)
    _emit(g, rows, format_chattiness_table(rows))
    return EXIT_OK if all(r["correct"] for r in rows) else EXIT_DOMAIN


def cmd_eval_ablation(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.evalstats import ablation_ground_truth

    with tempfile.TemporaryDirectory(prefix="rgao-ablation-") as tmp:
        generate_preset(ns.preset, tmp, seed=g.seed)
        tree = summarize(build_index(tmp))
        rows = run_ablation(tree, ablation_ground_truth(tree))
    payload = [{"configuration": r.configuration, "ndcg_at_10": r.ndcg_at_10, "mrr": r.mrr,
                "misroute_pct": r.misroute_pct} for r in rows]
    _emit(g, payload, format_ablation_table(rows))
    return EXIT_OK


def cmd_bench(g: GlobalConfig, ns: argparse.Namespace) -> int:
    from rgao.evalstats import TARGETS, run_microbench

    targets = sorted(TARGETS) if ns.target == "all" else [ns.target]
    results = [run_microbench(t, ns.rounds) for t in targets]
    payload = [r.to_json() for r in results]
    if ns.json_out:
        _write_json(ns.json_out, payload if len(payload) > 1 else payload[0])
    _emit(g, payload if len(payload) > 1 else payload[0], "\n".join(str(r) for r in results))
    if ns.ceiling is not None and any(r.median > ns.ceiling for r in results):
        return EXIT_DOMAIN
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _globals() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flag from clobbering one given before it.
    p = _Parser(add_help=False)
    s = argparse.SUPPRESS
    p.add_argument("--config", default=s, help="router config file (JSON or TOML) [RGAO_CONFIG]")
    p.add_argument("--index", default=s, help=f"index file (default {DEFAULT_INDEX}) [RGAO_INDEX]")
    p.add_argument("--format", choices=("text", "json"), default=s, help="output format [RGAO_FORMAT]")
    p.add_argument("--json", action="store_true", default=s, help="shorthand for --format json")
    p.add_argument("--workers", type=int, default=s, help="worker threads [RGAO_WORKERS]")
    p.add_argument("--seed", type=int, default=s, help="random seed [RGAO_SEED]")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _globals()
    parser = _Parser(prog="rgao", parents=[common],
                     description="Retrieval-guided topology routing with verified budgets.")
    parser.add_argument("--version", action="store_true", help="print package and index format versions")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def leaf(group, name: str, handler: Callable[[GlobalConfig, argparse.Namespace], int], **kw):
        p = group.add_parser(name, parents=[common], **kw)
        p.set_defaults(handler=handler)
        return p

    index = sub.add_parser("index", help="build, inspect and query code indexes").add_subparsers(
        dest="index_command", parser_class=_Parser)
    p = leaf(index, "build", cmd_index_build, help="index a repository")
    p.add_argument("path")
    p.add_argument("--out")
    p.add_argument("--summaries", "--summary", choices=("deterministic", "semantic"), default="deterministic")
    p = leaf(index, "stats", cmd_index_stats, help="print build statistics")
    p.add_argument("file", nargs="?")
    p = leaf(index, "query", cmd_index_query, help="retrieve symbols for a query")
    p.add_argument("args", nargs="+", metavar="[INDEX] QUERY")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--context", "--context-file", dest="context")
    p.add_argument("--mask", help="comma-separated enabled signals, e.g. tfidf,lang,pr")

    p = leaf(sub, "route", cmd_route, help="choose a topology for a task")
    p.add_argument("args", nargs="+", metavar="[INDEX] TASK")
    p.add_argument("--repo", help="index this directory on the fly instead of loading an index")
    p.add_argument("--router-config", dest="router_config", help="overrides --config for this call")

    p = leaf(sub, "verify-dag", cmd_verify_dag, help="statically verify a delegation forest")
    p.add_argument("forest")

    swarm = sub.add_parser("swarm", help="run a simulated swarm").add_subparsers(
        dest="swarm_command", parser_class=_Parser)
    p = leaf(swarm, "run", cmd_swarm_run, help="detect a pipeline and run it")
    p.add_argument("--pipeline", required=True)
    p.add_argument("--budget", choices=sorted(PRESET_TIERS), default="standard")
    p.add_argument("--inject", action="append", metavar="KIND:TASK",
                   help="timeout:<task> or error:<task>; task is an index, id or contract name")
    p.add_argument("--trace")
    p.add_argument("--tokens", type=int, default=2000, help="scripted tokens per task")

    ev = sub.add_parser("eval", help="evaluation harnesses").add_subparsers(dest="eval_command", parser_class=_Parser)
    p = leaf(ev, "routing", cmd_eval_routing, help="regex baseline versus retrieval-driven routing")
    p.add_argument("--n", type=int, default=250)
    p.add_argument("--dataset", help="read instances from JSONL instead of generating")
    p.add_argument("--out", help="write the generated dataset as JSONL")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--split", choices=("eval", "tune"), default="eval")
    p.add_argument("--max-misroute", type=float, help="exit 1 if the router's misroute rate exceeds this")
    p = leaf(ev, "pipelines", cmd_eval_pipelines, help="five fixture pipelines")
    p.add_argument("--budget", choices=sorted(PRESET_TIERS), default="standard")
    p = leaf(ev, "chattiness", cmd_eval_chattiness, help="golden repetition scenarios")
    p.add_argument("--window", type=int, default=6)
    p.add_argument("--threshold", type=int, default=3)
    p = leaf(ev, "ablation", cmd_eval_ablation, help="leave-one-signal-out retrieval table")
    p.add_argument("--preset", default="bench-200")

    from rgao.evalstats import TARGETS

    p = leaf(sub, "bench", cmd_bench, help="microbenchmarks")
    p.add_argument("target", choices=[*sorted(TARGETS), "all"])
    p.add_argument("--json-out", "-o", dest="json_out", metavar="FILE", help="write results as JSON")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--ceiling", type=float, help="exit 1 if any median exceeds this")
    return parser


DOMAIN_ERRORS = (DomainError, CodeIndexError, BudgetError, RetrievalError, ValueError, KeyError, OSError)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if getattr(ns, "version", False):
            print(f"rgao {__version__} (index format {FORMAT_VERSION})")
            return EXIT_OK
        handler = getattr(ns, "handler", None)
        if handler is None:
            raise UsageError(parser.format_usage().strip())
        g = GlobalConfig.resolve(ns, os.environ)
        return handler(g, ns)
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        if "usage:" not in str(exc):
            print(parser.format_usage().strip(), file=sys.stderr)
        return EXIT_USAGE
    except DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
