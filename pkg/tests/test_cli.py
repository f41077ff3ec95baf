import json

import pytest

from rgao.cli import main
from tests.conftest import fig2_forest, write_files

SMALL_REPO = {
    "app/main.py": "from app.util import helper\n\n\ndef run():\n    return helper()\n",
    "app/util.py": "def helper():\n    \"\"\"Return one.\"\"\"\n    return 1\n",
}


@pytest.fixture
def repo(tmp_path):
    return write_files(tmp_path / "repo", SMALL_REPO)


@pytest.fixture
def index(tmp_path, repo):
    out = tmp_path / "idx.json"
    assert main(["index", "build", str(repo), "--out", str(out)]) == 0
    return out


@pytest.fixture
def forests(tmp_path):
    ok, bad = tmp_path / "ok.json", tmp_path / "bad.json"
    fig2_forest().dump(ok)
    fig2_forest(coder_tokens=500_000).dump(bad)
    return ok, bad


def run_json(capsys, argv):
    code = main([*argv, "--json"])
    return code, json.loads(capsys.readouterr().out)


class TestExitCodes:
    @pytest.mark.parametrize("argv", [[], ["bogus"], ["index"], ["index", "query"], ["route"],
                                      ["bench", "warp"], ["verify-dag"], ["swarm", "run"],
                                      ["eval", "routing", "--n", "x"], ["--workers", "0", "eval", "chattiness"]])
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == 2
        assert capsys.readouterr().err

    def test_version_and_help(self, capsys):
        assert main(["--version"]) == 0
        assert capsys.readouterr().out.strip() == "rgao 0.1.0 (index format 1)"
        assert main(["--help"]) == 0
        assert main(["index", "build", "--help"]) == 0

    def test_domain_errors(self, tmp_path, capsys):
        assert main(["index", "stats", str(tmp_path / "none.json")]) == 1
        assert main(["index", "build", str(tmp_path / "missing")]) == 1
        (tmp_path / "junk.json").write_text("{")
        assert main(["verify-dag", str(tmp_path / "junk.json")]) == 1
        assert main(["verify-dag", str(tmp_path / "absent.json")]) == 1
        assert main(["index", "query", str(tmp_path / "junk.json"), "x"]) == 1
        assert "error:" in capsys.readouterr().err

    def test_swarm_inject_bad_target(self):
        assert main(["swarm", "run", "--pipeline", "fix it", "--inject", "timeout:Planner"]) == 2
        assert main(["swarm", "run", "--pipeline", "fix it", "--inject", "meteor:0"]) == 2


class TestVerifyDag:
    def test_fig2_ok(self, forests, capsys):
        assert main(["verify-dag", str(forests[0])]) == 0
        assert capsys.readouterr().out.strip() == "ok: true (4 nodes, 3 edges)"

    def test_violation(self, forests, capsys):
        assert main(["verify-dag", str(forests[1])]) == 1
        out = capsys.readouterr().out
        assert "violation at root: tokens composed 560000 > limit 500000" in out

    def test_json(self, forests, capsys):
        code, obj = run_json(capsys, ["verify-dag", str(forests[1])])
        assert code == 1 and obj["ok"] is False and obj["violations"]


class TestIndex:
    def test_build_stats_query(self, index, capsys):
        capsys.readouterr()
        code, stats = run_json(capsys, ["index", "stats", str(index)])
        assert code == 0 and stats["file_count"] == 2 and stats["symbol_count"] == 3
        code, res = run_json(capsys, ["index", "query", str(index), "helper", "--k", "3"])
        assert code == 0 and any("helper" in i["id"] for i in res["results"])

    def test_default_index_from_env(self, index, monkeypatch, capsys):
        monkeypatch.setenv("RGAO_INDEX", str(index))
        assert main(["index", "stats"]) == 0
        assert "file_count: 2" in capsys.readouterr().out

    def test_flag_beats_env(self, index, monkeypatch, capsys, tmp_path):
        monkeypatch.setenv("RGAO_INDEX", str(tmp_path / "wrong.json"))
        assert main(["index", "query", "--index", str(index), "helper"]) == 0

    def test_env_format(self, index, monkeypatch, capsys):
        monkeypatch.setenv("RGAO_FORMAT", "json")
        capsys.readouterr()
        assert main(["index", "stats", str(index)]) == 0
        assert json.loads(capsys.readouterr().out)["node_count"] >= 6
        monkeypatch.setenv("RGAO_FORMAT", "xml")
        assert main(["index", "stats", str(index)]) == 2

    def test_bad_mask(self, index):
        assert main(["index", "query", str(index), "helper", "--mask", "nonsense"]) == 1


class TestRoute:
    def test_from_index(self, index, capsys):
        capsys.readouterr()
        code, obj = run_json(capsys, ["route", str(index), "update helper"])
        assert code == 0 and {"decision", "regex_baseline"} <= set(obj)

    def test_from_repo_with_config(self, repo, tmp_path, capsys):
        cfg = tmp_path / "r.toml"
        cfg.write_text("[router]\nfast_path_ceiling = 0.1\n")
        assert main(["route", "--repo", str(repo), "--config", str(cfg), "tweak helper"]) == 0
        assert "topology:" in capsys.readouterr().out
        (tmp_path / "bad.json").write_text(json.dumps({"nope": 1}))
        assert main(["route", "--repo", str(repo), "--router-config", str(tmp_path / "bad.json"), "x"]) == 1


class TestSwarm:
    def test_completed_with_retry(self, tmp_path, capsys):
        trace = tmp_path / "trace.json"
        argv = ["swarm", "run", "--pipeline", "plan it, implement it, then test it", "--budget", "tight",
                "--inject", "timeout:1", "--trace", str(trace)]
        assert main(argv) == 0
        out = capsys.readouterr().out
        assert "status: Completed" in out and out.count("intervention: RetrySame") == 1
        events = json.loads(trace.read_text())
        assert events[-1]["event"] == "swarm_end"

    def test_json(self, capsys):
        code, obj = run_json(capsys, ["swarm", "run", "--pipeline", "fix it", "--workers", "2"])
        assert code == 0 and obj["status"] == "Completed"

    def test_over_budget_script_exits_1(self, capsys):
        assert main(["swarm", "run", "--pipeline", "fix it", "--budget", "tight", "--tokens", "200000"]) == 1
        assert "status: BudgetExceeded" in capsys.readouterr().out


class TestEval:
    def test_routing_small(self, tmp_path, capsys):
        ds, rep = tmp_path / "d.jsonl", tmp_path / "r.json"
        assert main(["eval", "routing", "--n", "40", "--out", str(ds), "--report", str(rep)]) == 0
        assert json.loads(rep.read_text())["n_eval"] == 24
        capsys.readouterr()
        code, obj = run_json(capsys, ["eval", "routing", "--dataset", str(ds), "--split", "tune"])
        assert code == 0 and obj["n_eval"] == 16
        assert main(["eval", "routing", "--dataset", str(ds), "--max-misroute", "-1"]) == 1

    def test_pipelines(self, capsys):
        code, obj = run_json(capsys, ["eval", "pipelines"])
        assert code == 0 and obj["completed"] == obj["total"] == 5

    def test_chattiness(self, capsys):
        code, rows = run_json(capsys, ["eval", "chattiness"])
        assert code == 0 and len(rows) == 5
        assert main(["eval", "chattiness", "--threshold", "2"]) == 1

    def test_ablation(self, capsys):
        code, rows = run_json(capsys, ["eval", "ablation"])
        assert code == 0 and len(rows) == 8


class TestBench:
    def test_json_out(self, tmp_path, capsys):
        out = tmp_path / "b.json"
        assert main(["bench", "routing", "--rounds", "3", "-o", str(out)]) == 0
        obj = json.loads(out.read_text())
        assert obj["name"] == "routing" and obj["rounds"] == 3

    def test_ceiling(self):
        assert main(["bench", "routing", "--rounds", "3", "--ceiling", "0"]) == 1
