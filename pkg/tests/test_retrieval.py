import itertools
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgao.codeindex import build_index, summarize
from rgao.retrieval import (
    FEATURE_NAMES,
    FULL_MASK,
    EmptyQueryError,
    LatticeParams,
    NeedsSummariesError,
    QueryType,
    RankedList,
    SignalMask,
    ValueScorer,
    beam_summary_search,
    bm25_search,
    calibrate,
    classify_query,
    default_synonyms,
    lattice_search,
    multi_query_search,
    ndcg_at_k,
    reciprocal_rank,
    reformulations,
    rerank,
    retrieve,
    rrf_fuse,
    structural_search,
    value_score,
)
from rgao.retrieval.lexical import BM25_B, BM25_K1, node_text
from rgao.retrieval.text import STOPWORDS, tokenize
from tests.conftest import write_files


def brute_rrf(lists, k=60):
    """Independent reference: enumerate every (document, list) pair."""
    docs = sorted({d for lst in lists for d, _ in lst.items})
    scores = {}
    for d in docs:
        total = 0.0
        for lst in lists:
            for pos in range(len(lst.items)):
                if lst.items[pos][0] == d:
                    total += lst.weight * (1.0 / (k + pos + 1))
        scores[d] = total
    return sorted(scores.items(), key=lambda p: (-p[1], p[0]))


def _ranked(system, ids, weight=1.0):
    return RankedList(system, tuple((d, 1.0 / (i + 1)) for i, d in enumerate(ids)), weight)


@pytest.fixture
def small_tree(tmp_path):
    write_files(tmp_path, {
        "app/auth.py": 'def login_user(name):\n    """Authenticate a user by name."""\n    return check(name)\n\n\n'
                       'def check(name):\n    return bool(name)\n',
        "app/cache.py": 'class CacheStore:\n    """Keeps cached entries."""\n\n    def get(self, key):\n'
                        '        return None\n',
        "lib/util.py": 'def helper():\n    return 1\n',
    })
    return summarize(build_index(tmp_path))


class TestClassify:
    @pytest.mark.parametrize("query,qtype", [
        ("authenticate_user", QueryType.IDENTIFIER),
        ('"retry budget exceeded"', QueryType.EXACT),
        ("how does caching work", QueryType.CONCEPTUAL),
        ("what calls compute_total", QueryType.DEPENDENCY),
        ("directory layout of the project", QueryType.STRUCTURAL),
    ])
    def test_rules(self, query, qtype):
        t, conf = classify_query(query)
        assert t is qtype and 0.0 < conf <= 1.0

    def test_empty(self):
        with pytest.raises(EmptyQueryError):
            classify_query("   ")


class TestBM25:
    def test_unique_symbol_first(self, small_tree):
        assert bm25_search(small_tree, "check").ids[0] == "app/auth.py::check@6"

    def test_empty_corpus(self, tmp_path):
        assert bm25_search(build_index(tmp_path), "anything").items == ()

    def test_term_frequency_against_hand_formula(self, tmp_path):
        write_files(tmp_path, {
            "a.py": 'def foo():\n    """zebra zebra quux"""\n',
            "b.py": 'def bar():\n    """zebra wombat quux"""\n',
        })
        tree = build_index(tmp_path)
        ranked = dict(bm25_search(tree, "zebra").items)
        foo, bar = "a.py::foo@1", "b.py::bar@1"
        assert ranked[foo] > ranked[bar]
        docs = {nid: Counter(tokenize(node_text(tree, tree[nid]))) for nid in tree.nodes
                if tree[nid].kind.value in ("file", "symbol")}
        avgdl = sum(sum(c.values()) for c in docs.values()) / len(docs)
        df = sum("zebra" in c for c in docs.values())
        idf = math.log(1 + (len(docs) - df + 0.5) / (df + 0.5))
        for nid in (foo, bar):
            tf, dl = docs[nid]["zebra"], sum(docs[nid].values())
            expected = idf * tf * (BM25_K1 + 1) / (tf + BM25_K1 * (1 - BM25_B + BM25_B * dl / avgdl))
            assert ranked[nid] == pytest.approx(expected)


class TestLattice:
    def test_alpha_one_is_raw(self, small_tree):
        raw = {nid: (hash(nid) % 97) / 97 for nid in small_tree.nodes}
        ranked = lattice_search(small_tree, "user", LatticeParams(alpha=1.0), raw_score=raw.__getitem__)
        assert ranked.items and all(s == pytest.approx(raw[nid]) for nid, s in ranked.items)

    def test_two_level_ema(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"f.py": "def g():\n    return 1\n"}))
        raw = {".": 0.8, "f.py": 0.5, "f.py::g@1": 0.5}
        ranked = dict(lattice_search(tree, "g", LatticeParams(alpha=0.6), raw_score=raw.__getitem__).items)
        file_cal = 0.6 * 0.5 + 0.4 * 0.8
        assert file_cal == pytest.approx(0.62)
        assert ranked["f.py::g@1"] == pytest.approx(0.6 * 0.5 + 0.4 * file_cal)
        assert calibrate(0.5, 0.8, 0.6) == pytest.approx(0.62)

    def test_root_only(self, tmp_path):
        assert lattice_search(summarize(build_index(tmp_path)), "x").items == ()

    def test_requires_summaries(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"f.py": "def g():\n    return 1\n"}))
        with pytest.raises(NeedsSummariesError):
            lattice_search(tree, "g")

    def test_expansion_cap(self, bench200_tree):
        calls = []

        def raw(nid):
            calls.append(nid)
            return 0.5

        lattice_search(bench200_tree, "x", LatticeParams(max_expansions=3, max_branch=8), raw_score=raw)
        # Root plus the children of at most three expanded nodes.
        assert len(calls) <= 1 + 3 * max(len(n.children) for n in bench200_tree.walk())

    def test_param_validation(self):
        with pytest.raises(ValueError):
            LatticeParams(alpha=1.5)


class TestMultiQuery:
    def test_default_dictionary_size(self):
        assert len(default_synonyms()) == 18

    def test_no_hits_equals_bm25(self, small_tree):
        assert multi_query_search(small_tree, "zzzz qqqq", {}) == bm25_search(small_tree, "zzzz qqqq")

    def test_two_subqueries_fused(self, small_tree):
        syn = {"auth": ["login"]}
        assert reformulations("auth handler", syn) == ["auth handler", "login handler"]
        expected = rrf_fuse([bm25_search(small_tree, "auth handler"), bm25_search(small_tree, "login handler")])
        got = multi_query_search(small_tree, "auth handler", syn)
        assert got.items == expected.top(10).items

    def test_reformulation_cap(self):
        assert len(reformulations("a b c d e", {w: [w + "x", w + "y"] for w in "abcde"})) == 4

    def test_empty_query(self, small_tree):
        with pytest.raises(EmptyQueryError):
            multi_query_search(small_tree, "")


class TestBeam:
    def test_all_terms_beat_none(self, small_tree):
        ranked = beam_summary_search(small_tree, "login user", beam=8)
        assert ranked.ids[0] == "app/auth.py::login_user@1"

    def test_root_only(self, tmp_path):
        assert beam_summary_search(summarize(build_index(tmp_path)), "x").items == ()

    def test_beam_one_is_greedy(self, small_tree):
        assert len(beam_summary_search(small_tree, "cache store get", beam=1)) <= 1 + 1

    def test_structural(self, small_tree):
        assert structural_search(small_tree, "lib util").ids[0] in {"lib", "lib/util.py"}


class TestRRF:
    def test_single_list_order(self):
        lst = _ranked("a", ["x", "y", "z"], weight=3.0)
        assert rrf_fuse([lst]).ids == ["x", "y", "z"]

    def test_two_over_sixty_one(self):
        fused = dict(rrf_fuse([_ranked("a", ["d"]), _ranked("b", ["d"])]).items)
        assert fused["d"] == pytest.approx(2 / 61) == pytest.approx(0.032787, abs=1e-6)

    def test_rank_two_twice_beats_rank_one_once(self):
        fused = rrf_fuse([_ranked("a", ["d1", "d2"]), _ranked("b", ["x", "d2"])])
        scores = dict(fused.items)
        assert scores["d2"] == pytest.approx(2 / 62) and scores["d1"] == pytest.approx(1 / 61)
        assert fused.ids.index("d2") < fused.ids.index("d1")

    def test_exhaustive_small(self):
        docs = ["a", "b", "c"]
        perms = [p for r in range(0, 4) for p in itertools.permutations(docs, r)]
        for n_lists in (1, 2):
            for combo in itertools.product(perms, repeat=n_lists):
                lists = [_ranked(f"s{i}", list(p)) for i, p in enumerate(combo)]
                got = rrf_fuse(lists).items
                want = brute_rrf(lists)
                assert [d for d, _ in got] == [d for d, _ in want]
                assert all(math.isclose(g, w) for (_, g), (_, w) in zip(got, want))

    @given(st.lists(st.tuples(st.permutations(list("abcde")).map(list), st.integers(0, 5),
                              st.floats(0.1, 3.0)), min_size=1, max_size=3))
    def test_weighted_random(self, spec):
        lists = [_ranked(f"s{i}", perm[:n], w) for i, (perm, n, w) in enumerate(spec)]
        got = rrf_fuse(lists).items
        want = brute_rrf(lists)
        assert [d for d, _ in got] == [d for d, _ in want]

    def test_errors(self):
        with pytest.raises(ValueError):
            rrf_fuse([])
        with pytest.raises(ValueError):
            RankedList("x", (("a", 1.0), ("a", 0.5)))


class TestScorer:
    def _oracle(self, tree, nid, query, context_file):
        """Recompute each signal from its definition without the lexical index."""
        node = tree[nid]
        counts = {i: Counter(tokenize(node_text(tree, n))) for i, n in tree.nodes.items()}
        n_all = len(tree.nodes)
        df = Counter(t for c in counts.values() for t in c)

        def idf(t):
            return math.log((1 + n_all) / (1 + df.get(t, 0))) + 1

        q = Counter(t for t in tokenize(query) if t not in STOPWORDS)
        qv = {t: c * idf(t) for t, c in q.items()}
        dv = {t: c * idf(t) for t, c in counts[nid].items() if t not in STOPWORDS}
        qn, dn = math.sqrt(sum(v * v for v in qv.values())), math.sqrt(sum(v * v for v in dv.values()))
        tfidf = min(1.0, sum(w * dv.get(t, 0) for t, w in qv.items()) / (qn * dn)) if qn and dn else 0.0
        lang = 1.0 if node.language in ("python", "javascript", "typescript") else 0.5
        types = {"function": 1, "method": 5 / 6, "class": 4 / 6, "variable": 3 / 6, "import": 2 / 6, "block": 1 / 6}
        typ = types.get(node.symbol_type, 0.0)
        ctx = 1.0 if node.path == context_file else 0.0
        symbols = [n.id for n in tree.symbols()]
        deg = {s: len(tree.out_edges(s)) + len(tree.in_edges(s)) for s in symbols}
        mx = max(deg.values())
        hub = math.log1p(deg[nid]) / math.log1p(mx) if mx else 0.0
        length = min(1.0, node.length / 2000)
        return {"tfidf": tfidf, "lang": lang, "type": typ, "ctx": ctx, "hub": hub, "len": length}

    def test_three_node_fixture(self, tmp_path):
        tree = summarize(build_index(write_files(tmp_path, {
            "m.py": "def a():\n    return b()\n\n\ndef b():\n    return c()\n\n\ndef c():\n    return 0\n"})))
        for nid in ("m.py::a@1", "m.py::b@5", "m.py::c@9"):
            vs = value_score(tree, nid, "return b value", context_file="m.py")
            want = self._oracle(tree, nid, "return b value", "m.py")
            for name, value in want.items():
                assert vs.signals[name] == pytest.approx(value), (nid, name)
            assert vs.score == pytest.approx(sum(vs.signals.values()) / 7)
        # Chain a -> b -> c: PageRank mass accumulates downstream.
        pr = {n: value_score(tree, n, "x").signals["pr"] for n in ("m.py::a@1", "m.py::c@9")}
        assert pr["m.py::c@9"] == 1.0 and pr["m.py::a@1"] == 0.0

    def test_mask_mean(self, small_tree):
        nid = "app/auth.py::check@6"
        only = value_score(small_tree, nid, "check", mask=SignalMask.only(["lang", "type"]))
        assert only.score == pytest.approx((only.signals["lang"] + only.signals["type"]) / 2)
        assert set(only.signals) == {"lang", "type"}

    def test_mask_helpers(self):
        assert SignalMask.parse("tfidf,pr").enabled == ("tfidf", "pr")
        assert "hub" not in SignalMask.without("hub").enabled
        with pytest.raises(ValueError):
            SignalMask(**dict.fromkeys(FEATURE_NAMES, False))
        with pytest.raises(ValueError):
            SignalMask.only(["colour"])

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, bench200_tree, data):
        ids = sorted(bench200_tree.nodes)
        nid = data.draw(st.sampled_from(ids))
        query = data.draw(st.text(min_size=0, max_size=40))
        ctx = data.draw(st.sampled_from([None, "src/auth/tokens.py", "src/billing/x.py"]))
        vs = value_score(bench200_tree, nid, query, ctx)
        assert 0.0 <= vs.score <= 1.0
        assert all(0.0 <= v <= 1.0 for v in vs.signals.values())


class TestRerank:
    def test_empty(self, small_tree):
        assert rerank(small_tree, RankedList("x"), "q").items == ()

    def test_context_file_wins(self, tmp_path):
        tree = summarize(build_index(write_files(tmp_path, {
            "one/a.py": "def run():\n    return 1\n", "two/b.py": "def run():\n    return 1\n"})))
        cands = RankedList("x", (("two/b.py::run@1", 1.0), ("one/a.py::run@1", 1.0)))
        out = rerank(tree, cands, "run", context_file="one/a.py")
        assert out.ids[0] == "one/a.py::run@1"

    def test_fixed_point(self, small_tree):
        scorer = ValueScorer(small_tree, "zzz")
        syms = [n.id for n in small_tree.symbols() if not small_tree[n.id].docstring]
        cands = RankedList.from_scores("v", {s: scorer.score(s) for s in syms})
        assert rerank(small_tree, cands, "zzz", scorer=scorer).ids == cands.ids


class TestRetrieve:
    def test_identifier_query(self, small_tree):
        res = retrieve(small_tree, "login_user")
        assert res.query_type is QueryType.IDENTIFIER
        assert res.ids[0] == "app/auth.py::login_user@1"
        assert "app/auth.py" in res.ids

    def test_empty_tree(self, tmp_path):
        res = retrieve(summarize(build_index(tmp_path)), "anything")
        assert res.items == () and res.ambiguity == 1.0

    def test_agreeing_paths(self, bench200_tree):
        res = retrieve(bench200_tree, "compute auth tokens")
        assert res.ids[0] == "src/auth/tokens.py::compute_auth_tokens@24"
        assert res.ambiguity < 0.05
        assert res.to_json()["results"][0]["signals"]

    def test_unknown_words_are_ambiguous(self, bench200_tree):
        assert retrieve(bench200_tree, "quantum entanglement flux capacitor").ambiguity > 0.7

    def test_k(self, small_tree):
        with pytest.raises(ValueError):
            retrieve(small_tree, "x", k=0)
        res = retrieve(small_tree, "cache user", k=2)
        assert len(res.primary) <= 2


class TestMetrics:
    def test_ndcg_and_rr(self):
        assert ndcg_at_k(["a", "b"], {"a", "b"}) == pytest.approx(1.0)
        assert ndcg_at_k(["x", "a"], {"a"}) == pytest.approx(1 / math.log2(3))
        assert ndcg_at_k(["x"], set()) == 0.0
        assert reciprocal_rank(["x", "y", "a"], {"a"}) == pytest.approx(1 / 3)
        assert reciprocal_rank(["x"], {"a"}) == 0.0


def test_full_mask_is_all_seven():
    assert FULL_MASK.enabled == FEATURE_NAMES and len(FEATURE_NAMES) == 7
