"""Statistics, routing and pipeline harnesses, golden tables and microbenchmarks."""

from rgao.evalstats.bench import TARGETS, BenchResult, measure, run_microbench
from rgao.evalstats.dataset import (
    DEFAULT_MIX,
    LABELS,
    RepoDescriptor,
    RoutingInstance,
    apportion,
    dump_jsonl,
    generate_routing_dataset,
    load_jsonl,
    materialize_repo,
    repo_layout,
)
from rgao.evalstats.golden import ABLATION_QUERIES, ablation_ground_truth, chattiness_table, format_chattiness_table
from rgao.evalstats.pipelines import PIPELINES, PipelineReport, PipelineRow, run_pipeline, run_pipeline_suite
from rgao.evalstats.routing import InstanceOutcome, RoutingReport, eval_routing, route_instance, summarize_outcomes
from rgao.evalstats.stats import McNemarResult, PairedOutcome, holm, mcnemar, wilson_ci

import types as _types

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _types.ModuleType)]
