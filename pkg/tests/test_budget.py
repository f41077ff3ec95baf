import json
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgao.budget import (
    DIMENSIONS,
    MAX_COMPONENT,
    BudgetOverflowError,
    BudgetTracker,
    BudgetVector,
    DelegationForest,
    DelegationNode,
    ForestStructureError,
    PreconditionError,
    VerifiedForest,
    certify,
    compose_parallel,
    compose_sequential,
    leq,
    oplus,
    osum,
    otimes_sequential,
    verify_conservation,
)
from rgao.budget_sim import random_verified_forest, simulate
from tests.conftest import FIG2_CHILDREN, FIG2_ROOT, fig2_forest

vectors = st.builds(BudgetVector, *[st.integers(0, 10**6)] * 6)
B = BudgetVector


class TestVector:
    def test_fig2_children_sum(self):
        assert osum(FIG2_CHILDREN.values()) == B(30, 100, 160_000, 210, 5, 2)

    def test_identity_and_handworked_sum(self):
        x = B(3, 1, 4, 1, 5, 9)
        assert oplus(B.zero(), x) == x
        assert oplus(B(1, 2, 3, 4, 5, 6), B(6, 5, 4, 3, 2, 1)) == B(7, 7, 7, 7, 7, 7)

    def test_sequential_matches_parallel(self):
        assert otimes_sequential(B(1, 1, 1, 1, 1, 1), B(2, 2, 2, 2, 2, 2)) == B(3, 3, 3, 3, 3, 3)
        kids = list(FIG2_CHILDREN.values())
        seq = otimes_sequential(otimes_sequential(kids[0], kids[1]), kids[2])
        assert seq == osum(kids)

    def test_order(self):
        assert leq(B(30, 100, 160_000, 210, 5, 2), FIG2_ROOT)
        assert not leq(B(1, 0, 0, 0, 0, 0), B(0, 9, 9, 9, 9, 9))

    @pytest.mark.parametrize("bad", [-1, 1.5, True, "3"])
    def test_rejects_bad_components(self, bad):
        with pytest.raises((TypeError, ValueError)):
            B(iterations=bad)

    def test_overflow_is_checked(self):
        big = B(tokens=MAX_COMPONENT)
        with pytest.raises(BudgetOverflowError):
            oplus(big, B(tokens=1))

    def test_of_length(self):
        with pytest.raises(ValueError):
            B.of([1, 2, 3])

    @given(vectors, vectors, vectors)
    def test_monoid_laws(self, a, b, c):
        assert oplus(a, b) == oplus(b, a)
        assert oplus(oplus(a, b), c) == oplus(a, oplus(b, c))
        assert leq(a, oplus(a, b))

    @given(vectors)
    def test_leq_reflexive(self, x):
        assert leq(x, x)


class TestTracker:
    def test_reaching_a_limit_latches_exceeded(self):
        t = BudgetTracker(B(2, 9, 9, 9, 9, 9))
        assert t.admit(B(1))
        # Admission checks u + c <= B; reaching the limit then sets exceeded.
        assert t.admit(B(1))
        assert t.exceeded
        assert not t.admit(B(1))
        assert t.used == B(2)

    def test_zero_cost_never_changes_state(self):
        t = BudgetTracker(B(1, 1, 1, 1, 1, 1))
        assert t.admit(B())
        assert t.used == B() and not t.exceeded

    def test_tight_tier_replay(self):
        t = BudgetTracker(B(5, 15, 10_000, 30, 1, 0))
        assert [t.record_iteration() for _ in range(6)] == [True] * 5 + [False]

    def test_denied_resource(self):
        t = BudgetTracker(B(5, 15, 10_000, 30, 1, 0))
        assert not t.exceeded
        assert not t.admit(B(handoffs=1))
        assert t.exceeded

    def test_chain_is_atomic(self):
        parent = BudgetTracker(B(tokens=10))
        child = BudgetTracker(B(tokens=100), parent)
        assert child.admit(B(tokens=6))
        assert not child.admit(B(tokens=6))
        assert parent.used == child.used == B(tokens=6)

    def test_concurrent_admits_never_overshoot(self):
        t = BudgetTracker(B(tokens=1000, iterations=10**6))
        cost = B(tokens=7, iterations=1)

        def spin():
            for _ in range(500):
                t.admit(cost)

        threads = [threading.Thread(target=spin) for _ in range(8)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert t.used.tokens <= 1000
        assert t.used.tokens % 7 == 0

    @given(st.lists(vectors, max_size=30), vectors)
    def test_used_never_passes_limit(self, costs, limit):
        t = BudgetTracker(limit)
        for c in costs:
            before = t.used
            ok = t.admit(c)
            assert t.used == (oplus(before, c) if ok else before)
            assert leq(t.used, limit)


class TestVerifier:
    def test_fig2_verifies(self):
        report = verify_conservation(fig2_forest())
        assert report.ok and report.violations == ()
        assert (report.nodes_visited, report.edges_visited) == (4, 3)

    def test_fig2_with_large_coder_rejected_on_tokens(self):
        report = verify_conservation(fig2_forest(coder_tokens=500_000))
        assert not report.ok
        [v] = report.violations
        assert (v.node, v.dimension, v.composed, v.limit) == ("root", "tokens", 560_000, 500_000)

    def test_singleton(self):
        assert verify_conservation([DelegationNode("a", B())]).ok

    def test_direct_cost_counts(self):
        nodes = [DelegationNode("a", B(tokens=10), B(tokens=5), ("b",)), DelegationNode("b", B(tokens=6))]
        report = verify_conservation(nodes)
        assert not report.ok and report.violations[0].composed == 11

    def test_structure_errors(self):
        with pytest.raises(ForestStructureError):
            verify_conservation([DelegationNode("a", B(), children=("ghost",))])
        with pytest.raises(ForestStructureError):
            verify_conservation([DelegationNode("a", B(), children=("b",)), DelegationNode("b", B(), children=("a",))])
        with pytest.raises(ForestStructureError):
            DelegationForest([DelegationNode("a", B()), DelegationNode("a", B())])

    def test_json_round_trip(self, tmp_path):
        forest = fig2_forest()
        path = tmp_path / "f.json"
        forest.dump(path)
        again = DelegationForest.load(path)
        assert again.to_json() == forest.to_json()
        obj = json.loads(path.read_text())
        assert set(obj[0]) == {"id", "budget", "direct_cost", "children"}
        assert DelegationForest.from_json({"nodes": obj}).to_json() == forest.to_json()

    @given(st.integers(0, 2**32))
    @settings(max_examples=200)
    def test_grown_forests_verify(self, seed):
        assert verify_conservation(random_verified_forest(random.Random(seed))).ok

    @given(st.integers(0, 2**32), st.integers(0, 5), st.integers(1, 10**6))
    @settings(max_examples=200)
    def test_inflating_a_child_is_caught(self, seed, dim, extra):
        forest = random_verified_forest(random.Random(seed))
        parents = [n for n in forest.nodes.values() if n.children]
        if not parents:
            return
        parent = parents[0]
        child = forest[parent.children[0]]
        comps = list(child.budget)
        headroom = parent.budget[dim] - parent.direct_cost[dim] - sum(forest[c].budget[dim] for c in parent.children)
        comps[dim] += headroom + extra
        nodes = dict(forest.nodes)
        nodes[child.id] = DelegationNode(child.id, B.of(comps), child.direct_cost, child.children)
        report = verify_conservation(nodes.values())
        assert any(v.node == parent.id and v.component == dim for v in report.violations)


class TestComposition:
    def test_two_singletons(self):
        r = compose_parallel(certify([DelegationNode("a", B(1, 2, 3, 4, 5, 6))]),
                             certify([DelegationNode("b", B(6, 5, 4, 3, 2, 1))]))
        assert r.budget == B(7, 7, 7, 7, 7, 7)
        assert verify_conservation(r.forest).ok

    def test_two_fig2_trees(self):
        r = compose_sequential(certify(fig2_forest(prefix="x.")), certify(fig2_forest(prefix="y.")))
        assert r.budget == B(60, 200, 1_000_000, 600, 10, 6)
        fresh = verify_conservation(r.forest)
        assert fresh.ok and fresh.nodes_visited == r.report.nodes_visited == 9

    def test_unverified_operand_rejected(self):
        good = certify(fig2_forest(prefix="x."))
        with pytest.raises(PreconditionError):
            certify(fig2_forest(coder_tokens=500_000))
        with pytest.raises(PreconditionError):
            compose_parallel(good, fig2_forest(prefix="y."))  # type: ignore[arg-type]
        assert isinstance(good, VerifiedForest)

    def test_id_clash(self):
        with pytest.raises(ForestStructureError):
            compose_parallel(certify(fig2_forest()), certify(fig2_forest()))


class TestSimulatedConservation:
    @given(st.integers(0, 2**32), st.booleans())
    @settings(max_examples=300, deadline=None)
    def test_usage_within_root(self, seed, chained):
        rng = random.Random(seed)
        forest = random_verified_forest(rng)
        out = simulate(forest, rng, chained=chained)
        root_budget = osum(forest[r].budget for r in forest.roots)
        assert leq(out.total_used, root_budget)
        for nid, used in out.used_by_node.items():
            assert leq(used, forest[nid].budget)


def test_dimension_names():
    assert DIMENSIONS == ("iterations", "tool_calls", "tokens", "seconds", "retries", "handoffs")
