import json
import math
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binomtest
from statsmodels.stats.contingency_tables import mcnemar as sm_mcnemar
from statsmodels.stats.proportion import proportion_confint

from rgao.codeindex import build_index
from rgao.evalstats import (
    DEFAULT_MIX,
    LABELS,
    TARGETS,
    InstanceOutcome,
    PairedOutcome,
    ablation_ground_truth,
    apportion,
    chattiness_table,
    dump_jsonl,
    eval_routing,
    format_chattiness_table,
    generate_routing_dataset,
    holm,
    load_jsonl,
    materialize_repo,
    mcnemar,
    run_microbench,
    run_pipeline_suite,
    summarize_outcomes,
    wilson_ci,
)
from rgao.retrieval import format_ablation_table, run_ablation
from rgao.router import TopologyKind

GRID = [(k, n) for n in (1, 2, 5, 10, 17, 40, 100, 250, 999, 2000) for k in sorted({0, 1, n // 3, n // 2, n - 1, n})
        if 0 <= k <= n]


class TestWilson:
    def test_hand_value(self):
        lo, hi = wilson_ci(50, 100)
        assert (round(lo, 4), round(hi, 4)) == (0.4038, 0.5962)

    @pytest.mark.parametrize("k,n", GRID)
    def test_matches_statsmodels(self, k, n):
        lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
        assert wilson_ci(k, n) == pytest.approx((lo, hi), abs=1e-9)

    def test_edges(self):
        assert wilson_ci(0, 10)[0] == 0.0 and wilson_ci(10, 10)[1] == 1.0
        for bad in ((1, 0), (-1, 3), (4, 3)):
            with pytest.raises(ValueError):
                wilson_ci(*bad)

    @given(st.integers(1, 5000), st.data())
    def test_contains_point_estimate(self, n, data):
        k = data.draw(st.integers(0, n))
        lo, hi = wilson_ci(k, n)
        assert 0.0 <= lo <= k / n <= hi <= 1.0


class TestMcNemar:
    @pytest.mark.parametrize("b,c,stat,p", [(30, 10, 9.025, None), (2, 8, 2.0, 0.109375), (20, 20, 0.025, 0.874)])
    def test_hand_values(self, b, c, stat, p):
        r = mcnemar(b, c)
        assert r.statistic == pytest.approx(stat)
        if p is not None:
            assert r.p_value == pytest.approx(p, abs=5e-4)

    def test_boundary(self):
        assert mcnemar(12, 12).variant == "exact"  # 24 discordant pairs
        assert mcnemar(12, 13).variant == "corrected"  # 25

    def test_degenerate(self):
        r = mcnemar(0, 0)
        assert r.degenerate and r.p_value == 1.0

    @pytest.mark.parametrize("b,c", [(b, c) for b in range(0, 40, 3) for c in range(0, 40, 4) if b + c])
    def test_matches_reference(self, b, c):
        r = mcnemar(b, c)
        if b + c < 25:
            ref = binomtest(min(b, c), b + c, 0.5).pvalue
            assert r.p_value == pytest.approx(min(1.0, ref), abs=1e-12)
        else:
            ref = sm_mcnemar([[0, b], [c, 0]], exact=False, correction=True)
            assert (r.statistic, r.p_value) == pytest.approx((ref.statistic, ref.pvalue), abs=1e-10)

    def test_symmetric(self):
        assert mcnemar(3, 17) == mcnemar(17, 3)

    def test_paired_counts(self):
        p = PairedOutcome.from_flags([True, True, False, False], [True, False, True, False])
        assert p.to_json() == {"a": 1, "b": 1, "c": 1, "d": 1} and p.n == 4
        with pytest.raises(ValueError):
            PairedOutcome.from_flags([True], [])


class TestHolm:
    def test_known(self):
        assert holm([0.01, 0.04, 0.03]) == pytest.approx([0.03, 0.06, 0.06])

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
    def test_monotone_and_dominating(self, ps):
        adj = holm(ps)
        assert all(a >= p for a, p in zip(adj, ps)) and all(a <= 1.0 for a in adj)
        order = sorted(range(len(ps)), key=lambda i: ps[i])
        assert all(adj[i] <= adj[j] for i, j in zip(order, order[1:]))


class TestDataset:
    def test_apportion(self):
        assert apportion(250, DEFAULT_MIX) == [95, 72, 53, 30]
        assert apportion(100, [95, 72, 53, 30]) == [38, 29, 21, 12]
        assert apportion(0, DEFAULT_MIX) == [0, 0, 0, 0]

    @given(st.integers(0, 500), st.lists(st.floats(0.01, 1), min_size=1, max_size=6))
    def test_apportion_sums(self, n, w):
        counts = apportion(n, w)
        assert sum(counts) == n
        assert all(abs(c - n * x / sum(w)) < 1 + 1e-9 for c, x in zip(counts, w))

    def test_label_counts_and_splits(self):
        ds = generate_routing_dataset()
        assert Counter(i.oracle for i in ds) == dict(zip(LABELS, (95, 72, 53, 30)))
        assert Counter(i.split for i in ds) == {"tune": 100, "eval": 150}
        assert sum(i.adversarial for i in ds) == sum(round(c * 0.35) for c in (95, 72, 53, 30))

    def test_byte_identical(self, tmp_path):
        dump_jsonl(generate_routing_dataset(seed=3), tmp_path / "a.jsonl")
        dump_jsonl(generate_routing_dataset(seed=3), tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert load_jsonl(tmp_path / "a.jsonl") == generate_routing_dataset(seed=3)
        dump_jsonl(generate_routing_dataset(seed=4), tmp_path / "c.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() != (tmp_path / "c.jsonl").read_bytes()

    def test_fast_path_repos_hold_one_file(self, tmp_path):
        ds = [i for i in generate_routing_dataset(n=40) if i.oracle is TopologyKind.FAST_PATH]
        assert ds
        for inst in ds[:5]:
            tree = build_index(materialize_repo(inst.repo, tmp_path / inst.id))
            assert tree.stats.file_count == 1

    def test_bad_mix(self):
        with pytest.raises(ValueError):
            generate_routing_dataset(mix=(0.5, 0.5, 0.5, 0.5))


class TestRouting:
    def test_small_run(self):
        report = eval_routing(generate_routing_dataset(n=40))
        obj = json.loads(json.dumps(report.to_json()))
        assert obj["n_eval"] == len(report.outcomes) == 24
        assert set(obj["methods"]) == {"regex", "rgao"}
        for m in report.methods.values():
            assert sum(map(sum, (r.values() for r in m.confusion.values()))) == m.n
        assert "McNemar" in report.format_table()

    def test_missing_split(self):
        with pytest.raises(ValueError):
            eval_routing(generate_routing_dataset(n=4, tune=4))

    def test_all_agree_is_degenerate(self):
        k = TopologyKind.SUB_AGENT
        report = summarize_outcomes([InstanceOutcome(f"x{i}", k, k, k, False) for i in range(5)])
        assert report.mcnemar.degenerate and report.mcnemar.p_value == 1.0
        assert report.methods["rgao"].misroutes == 0

    def test_empty_outcomes(self):
        report = summarize_outcomes([])
        assert report.methods["regex"].rate == 0.0 and report.mcnemar.degenerate


class TestGoldenTables:
    def test_chattiness(self):
        rows = chattiness_table()
        assert [(r["scenario"], r["expected"]) for r in rows] == [
            ("No repetition", False), ("Mild repetition", False), ("High repetition", True),
            ("Tool loop", True), ("Varied actions", False)]
        assert all(r["correct"] for r in rows)
        assert format_chattiness_table(rows).count("\n") == 5

    def test_pipelines_complete(self):
        report = run_pipeline_suite()
        assert report.completed == 5 and all(r.passed for r in report.rows), report.format_table()
        assert [r.retry_same for r in report.rows] == [0, 1, 0, 1, 0]
        assert all(abs(r.tokens - 6000) <= 1200 for r in report.rows)

    def test_ablation_shape(self, bench200_tree):
        rows = run_ablation(bench200_tree, ablation_ground_truth(bench200_tree))
        assert len(rows) == 8 and rows[0].configuration == "All 7 signals"
        assert all(0.0 <= r.ndcg_at_10 <= 1.0 and 0.0 <= r.mrr <= 1.0 for r in rows)
        assert format_ablation_table(rows).count("\n") == 8


class TestBench:
    @pytest.mark.parametrize("target", ["routing", "dag_build", "budget_check"])
    def test_json_shape(self, target):
        res = run_microbench(target, rounds=5)
        obj = json.loads(json.dumps(res.to_json()))
        assert set(obj) == {"name", "rounds", "median", "mad", "unit", "samples", "environment"}
        assert obj["rounds"] == len(obj["samples"]) == 5
        assert obj["mad"] >= 0 and math.isfinite(obj["median"])

    def test_unknown_target(self):
        with pytest.raises(ValueError):
            run_microbench("warp")
        assert {"tree_index", "dag_build", "budget_check", "routing", "complexity"} <= set(TARGETS)
