import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rgao.codeindex import build_index, summarize
from rgao.retrieval import retrieve
from rgao.router import (
    DEEP_RESEARCH,
    FAST_PATH,
    PIPELINE,
    SUB_AGENT,
    SWARM,
    ComplexityVector,
    ConsistencyError,
    RegexRules,
    RouterConfig,
    Topology,
    TopologyKind,
    extract_complexity,
    normalized_signals,
    regex_route,
    route,
    touched_paths,
)
from tests.conftest import write_files

complexities = st.builds(ComplexityVector, st.integers(0, 20), st.integers(0, 30), st.integers(0, 120),
                         st.integers(0, 12), st.floats(0, 1))


class TestExtract:
    def test_empty(self, tmp_path):
        assert extract_complexity(build_index(tmp_path), []).as_tuple() == (0, 0, 0, 0, 0.0)

    def test_chain_in_one_file(self, tmp_path):
        tree = build_index(write_files(tmp_path, {
            "m.py": "def a():\n    return b()\n\n\ndef b():\n    return c()\n\n\ndef c():\n    return 0\n"}))
        c = extract_complexity(tree, ["m.py::a@1", "m.py::b@5", "m.py::c@9"])
        assert (c.d_dep, c.n_f, c.n_s, c.rho_x) == (2, 1, 3, 0.0)
        assert c.h_t == 2

    def test_cross_directory_coupling(self, tmp_path):
        tree = build_index(write_files(tmp_path, {
            "one/a.py": "from two.b import g\n\n\ndef f():\n    return g()\n",
            "two/b.py": "def g():\n    return 1\n"}))
        c = extract_complexity(tree, ["one/a.py::f@4", "two/b.py::g@1"])
        assert c.rho_x == 0.5 and c.n_f == 2 and c.d_dep == 1

    def test_cycle_does_not_loop(self, tmp_path):
        tree = build_index(write_files(tmp_path, {
            "m.py": "def a():\n    return b()\n\n\ndef b():\n    return a()\n"}))
        assert extract_complexity(tree, ["m.py::a@1", "m.py::b@5"]).d_dep == 1

    def test_unknown_node(self, tmp_path):
        with pytest.raises(ConsistencyError):
            extract_complexity(build_index(tmp_path), ["ghost"])

    def test_from_retrieval(self, bench200_tree):
        res = retrieve(bench200_tree, "compute auth tokens")
        c = extract_complexity(bench200_tree, res)
        assert c.n_s == sum(bench200_tree[i].kind.value == "symbol" for i in set(res.ids))
        assert all(p.startswith("src/") for p in touched_paths(bench200_tree, res))

    def test_vector_validation(self):
        with pytest.raises(ValueError):
            ComplexityVector(rho_x=1.5)
        with pytest.raises(ValueError):
            ComplexityVector(d_dep=-1)


class TestRoute:
    def test_fast_path(self):
        d = route(ComplexityVector(1, 1, 2, 3, 0.0), 0.1)
        assert d.topology == FAST_PATH and d.aggregate < 0.45
        assert d.decided_by == "fast_path"

    def test_swarm(self):
        d = route(ComplexityVector(4, 6, 18, 4, 0.8), 0.2)
        assert d.topology == SWARM
        assert "multi_agent_files" in d.triggered_rules and d.triggered_rules[-1] == "sub_mode_swarm"

    def test_pipeline_when_weakly_coupled(self):
        assert route(ComplexityVector(4, 6, 18, 4, 0.2), 0.2).topology == PIPELINE

    @given(complexities)
    def test_ambiguity_dominates(self, c):
        assert route(c, 0.9).topology == DEEP_RESEARCH

    def test_sub_agent_and_risk_promotion(self):
        c = ComplexityVector(1, 2, 5, 3, 0.0)
        assert route(c, 0.1).topology == SUB_AGENT
        promoted = route(c, 0.1, paths=["src/auth/session.py"])
        assert promoted.topology.kind is TopologyKind.MULTI_AGENT
        assert promoted.decided_by == "modification_risk_promote"
        assert promoted.sensitive_paths == ("src/auth/session.py",)

    def test_breadth_and_depth_promotion(self):
        assert route(ComplexityVector(0, 8, 4, 2, 0.0), 0.0, RouterConfig(multi_agent_file_count=10,
                     multi_agent_floor=9)).decided_by == "scope_breadth_promote"
        assert route(ComplexityVector(4, 2, 4, 2, 0.0), 0.0, RouterConfig(multi_agent_floor=9)).decided_by \
            == "dependency_depth_promote"

    def test_normalisation_caps(self):
        sig = normalized_signals(ComplexityVector(100, 100, 1000, 100, 1.0), RouterConfig())
        assert all(v == 1.0 for v in sig.values())

    def test_bad_ambiguity(self):
        with pytest.raises(ValueError):
            route(ComplexityVector(), 1.5)

    @given(complexities, st.floats(0, 1))
    def test_decision_is_total_and_consistent(self, c, amb):
        d = route(c, amb)
        assert d.decided_by in d.triggered_rules
        assert (d.topology.sub_mode is not None) == (d.topology.kind is TopologyKind.MULTI_AGENT)
        assert json.loads(json.dumps(d.to_json()))["kind"] == d.topology.kind.value

    @given(complexities, st.integers(0, 5))
    def test_more_files_never_demotes_from_multi(self, c, extra):
        cfg = RouterConfig()
        base = route(c, 0.0, cfg).topology.kind
        bigger = ComplexityVector(c.d_dep, c.n_f + extra, c.n_s, c.h_t, c.rho_x)
        if base is TopologyKind.MULTI_AGENT:
            assert route(bigger, 0.0, cfg).topology.kind is TopologyKind.MULTI_AGENT


class TestConfig:
    def test_json_and_toml(self, tmp_path):
        (tmp_path / "r.json").write_text(json.dumps({"fast_path_ceiling": 0.3}))
        (tmp_path / "r.toml").write_text("[router]\nmulti_agent_floor = 2.0\n")
        assert RouterConfig.load(tmp_path / "r.json").fast_path_ceiling == 0.3
        assert RouterConfig.load(tmp_path / "r.toml").multi_agent_floor == 2.0

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            RouterConfig.from_mapping({"fast_path_cieling": 0.3})

    def test_round_trip(self):
        cfg = RouterConfig()
        assert RouterConfig.from_mapping(cfg.to_json()) == cfg


class TestRegex:
    @pytest.mark.parametrize("text,expected", [
        ("fix the typo in README", SUB_AGENT),
        ("investigate flaky test causes", DEEP_RESEARCH),
        ("implement the exporter then test it", PIPELINE),
        ("", FAST_PATH),
        ("rename a variable", FAST_PATH),
    ])
    def test_rule_table(self, text, expected):
        assert regex_route(text) == expected

    def test_keyword_is_word_bounded(self):
        assert regex_route("prefix handling") == FAST_PATH

    def test_custom_rules(self):
        rules = RegexRules.from_json({"version": 2, "default": "SubAgent",
                                      "rules": [{"name": "r", "topology": "DeepResearch", "any": ["why"]}]})
        assert regex_route("why", rules) == DEEP_RESEARCH
        assert regex_route("ok", rules) == SUB_AGENT


class TestTopology:
    def test_parse_and_str(self):
        assert Topology.parse("MultiAgent/swarm") == SWARM
        assert str(PIPELINE) == "MultiAgent/pipeline"

    def test_sub_mode_required_for_multi(self):
        with pytest.raises(ValueError):
            Topology(TopologyKind.MULTI_AGENT)
        with pytest.raises(ValueError):
            Topology(TopologyKind.FAST_PATH, SWARM.sub_mode)


def test_end_to_end_on_small_repo(tmp_path):
    tree = summarize(build_index(write_files(tmp_path, {"tool.py": "def greet():\n    return 'hi'\n"})))
    res = retrieve(tree, "greet")
    d = route(extract_complexity(tree, res), res.ambiguity, paths=touched_paths(tree, res))
    assert d.topology == FAST_PATH
