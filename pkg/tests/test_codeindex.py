import json
import os
import statistics
import time
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rgao.codeindex import (
    FORMAT_VERSION,
    ROOT_ID,
    EdgeType,
    IndexConfig,
    NodeKind,
    StaleIndexError,
    UnknownNodeError,
    VersionMismatchError,
    build_index,
    edge_summary,
    fetch_content,
    generate_preset,
    generate_repo,
    load_index,
    neighbors_1hop,
    save_index,
    summarize,
)
from rgao.codeindex.model import IndexFormatError
from tests.conftest import write_files

ONE_CLASS = '''import os


class Box:
    """Holds things."""

    def put(self, x):
        return x

    def take(self):
        return None
'''

CHAIN = '''def a():
    return b()


def b():
    return c()


def c():
    return 1
'''

SEVEN_IMPORTS = "".join(f"import m{i}\n" for i in range(7)) + "\n\ndef f():\n    pass\n"


class TestBuild:
    def test_empty_directory(self, tmp_path):
        tree = build_index(tmp_path)
        assert len(tree) == 1 and tree.root.id == ROOT_ID

    def test_one_class_two_methods_one_import(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"box.py": ONE_CLASS}))
        kinds = Counter(n.kind for n in tree.walk())
        assert len(tree) == 6
        assert kinds == {NodeKind.ROOT: 1, NodeKind.FILE: 1, NodeKind.SYMBOL: 4}
        methods = [n for n in tree.symbols() if n.symbol_type == "method"]
        assert {m.name for m in methods} == {"put", "take"}
        assert all(tree[m.parent].name == "Box" for m in methods)
        tree.check_invariants()

    def test_bench200_has_2002_nodes(self, bench200_tree):
        assert len(bench200_tree) == 2002
        assert bench200_tree.stats.file_count == 200
        bench200_tree.check_invariants()

    def test_directories_before_files(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"z.py": "x = 1\n", "a/b.py": "y = 2\n"}))
        assert [c.kind for c in tree.children(ROOT_ID)] == [NodeKind.DIRECTORY, NodeKind.FILE]

    def test_excluded_and_unparsed(self, tmp_path):
        write_files(tmp_path, {"node_modules/x.js": "function f() {}\n", "notes.txt": "hi\n", "ok.py": "x = 1\n"})
        tree = build_index(tmp_path)
        assert {n.path for n in tree.files()} == {"ok.py"}

    def test_javascript(self, tmp_path):
        src = "import { b } from './b';\n\nexport function a() {\n  return b();\n}\n"
        write_files(tmp_path, {"a.js": src, "b.js": "export function b() {\n  return 1;\n}\n"})
        tree = build_index(tmp_path)
        a = next(n for n in tree.symbols() if n.name == "a")
        assert any(t.endswith("b.js::b@1") for t, _ in tree.out_edges(a.id))

    def test_max_depth(self, tmp_path):
        write_files(tmp_path, {"a/b/c/d.py": "x = 1\n"})
        assert not list(build_index(tmp_path, IndexConfig(max_depth=2)).files())

    def test_not_a_directory(self, tmp_path):
        with pytest.raises(NotADirectoryError):
            build_index(tmp_path / "missing")

    def test_unknown_node(self, tmp_path):
        with pytest.raises(UnknownNodeError):
            build_index(tmp_path)["nope"]

    def test_deterministic(self, bench200):
        assert build_index(bench200).structurally_equal(build_index(bench200))

    @given(st.integers(1, 30), st.integers(0, 1000))
    @settings(max_examples=15, deadline=None)
    def test_generator_invariants(self, tmp_path_factory, n_files, seed):
        root = tmp_path_factory.mktemp("gen")
        info = generate_repo(root, n_files, seed=seed)
        tree = build_index(root)
        tree.check_invariants()
        assert tree.stats.file_count == n_files
        assert tree.stats.symbol_count == info.symbols
        for e in tree.edges:
            if e.resolved:
                assert e.source in tree and e.target in tree


class TestSummaries:
    def test_symbol_without_docstring(self, tmp_path):
        tree = summarize(build_index(write_files(tmp_path, {"c.py": CHAIN})))
        assert tree.summary("c.py::a@1") == "function a at c.py:1-2"

    def test_import_list_truncated_to_five(self, tmp_path):
        tree = summarize(build_index(write_files(tmp_path, {"m.py": SEVEN_IMPORTS})))
        s = tree.summary("m.py")
        assert "imports m0, m1, m2, m3, m4, ... (+2 more)" in s
        assert "m5" not in s

    def test_semantic_edge_counts(self):
        assert edge_summary(Counter({EdgeType.CALLS: 3, EdgeType.IMPORTS: 2})) == "calls(3), imports(2)"

    def test_semantic_mode_lists_everything(self, tmp_path):
        tree = summarize(build_index(write_files(tmp_path, {"m.py": SEVEN_IMPORTS})), "semantic")
        assert "m6" in tree.summary("m.py")

    def test_every_node_summarised(self, bench200_tree):
        assert all(bench200_tree.summary(n.id) for n in bench200_tree.walk())

    @pytest.mark.parametrize("mode", ["deterministic", "semantic"])
    def test_summaries_under_25ms(self, bench200_tree, mode):
        samples = []
        for _ in range(7):
            t = time.perf_counter()
            summarize(bench200_tree, mode)
            samples.append(time.perf_counter() - t)
        assert statistics.median(samples) < 0.025

    def test_bad_mode(self, tmp_path):
        with pytest.raises(ValueError):
            summarize(build_index(tmp_path), "poetic")


class TestContent:
    def test_file_and_symbol_spans(self, tmp_path):
        body = "".join(f"line{i}\n" for i in range(1, 10)) + "def f():\n" + "".join(
            f"    x{i} = {i}\n" for i in range(9)) + "    return 0\n"
        write_files(tmp_path, {"s.py": body})
        tree = build_index(tmp_path)
        assert fetch_content(tree, "s.py") == body
        [sym] = [n for n in tree.symbols() if n.name == "f"]
        assert (sym.start_line, sym.end_line) == (10, 20)
        assert fetch_content(tree, sym.id) == "".join(body.splitlines(keepends=True)[9:20])

    def test_deleted_file_is_stale(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"s.py": CHAIN}))
        os.remove(tmp_path / "s.py")
        with pytest.raises(StaleIndexError):
            fetch_content(tree, "s.py")

    def test_edited_file_is_stale(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"s.py": CHAIN}))
        (tmp_path / "s.py").write_text(CHAIN + "\n# more\n")
        with pytest.raises(StaleIndexError):
            fetch_content(tree, "s.py::a@1")


class TestNeighbours:
    def test_two_symbol_fixture(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"p.py": "def A():\n    return B()\n\n\ndef B():\n    return 1\n"}))
        assert neighbors_1hop(tree, "p.py::A@1") == [("p.py::B@5", EdgeType.CALLS)]
        assert neighbors_1hop(tree, "p.py::B@5", "in") == [("p.py::A@1", EdgeType.CALLS)]
        assert neighbors_1hop(tree, "p.py::B@5") == []

    def test_not_a_symbol(self, tmp_path):
        tree = build_index(write_files(tmp_path, {"p.py": CHAIN}))
        with pytest.raises(ValueError):
            neighbors_1hop(tree, "p.py")


class TestStore:
    def test_root_only_round_trip(self, tmp_path):
        tree = build_index(tmp_path)
        save_index(tree, tmp_path / "i.json")
        assert load_index(tmp_path / "i.json").structurally_equal(tree)

    def test_bench200_round_trip(self, bench200_tree, tmp_path):
        save_index(bench200_tree, tmp_path / "i.json")
        again = load_index(tmp_path / "i.json")
        assert (len(again), len(again.edges)) == (len(bench200_tree), len(bench200_tree.edges))
        assert again.structurally_equal(bench200_tree)
        obj = json.loads((tmp_path / "i.json").read_text())
        assert set(obj) >= {"version", "root", "nodes", "edges", "stats"}

    def test_version_bump_rejected(self, tmp_path):
        save_index(build_index(tmp_path), tmp_path / "i.json")
        obj = json.loads((tmp_path / "i.json").read_text())
        obj["version"] = FORMAT_VERSION + 1
        (tmp_path / "i.json").write_text(json.dumps(obj))
        with pytest.raises(VersionMismatchError):
            load_index(tmp_path / "i.json")

    def test_corrupt_file(self, tmp_path):
        (tmp_path / "i.json").write_text("{not json")
        with pytest.raises(IndexFormatError):
            load_index(tmp_path / "i.json")


def test_preset_names(tmp_path):
    with pytest.raises(ValueError):
        generate_preset("bench-7", tmp_path)
