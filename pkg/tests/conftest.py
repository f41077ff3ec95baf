from __future__ import annotations

import pytest

from rgao.budget import BudgetVector, DelegationForest, DelegationNode
from rgao.codeindex import build_index, generate_preset, summarize

FIG2_ROOT = BudgetVector(30, 100, 500_000, 300, 5, 3)
FIG2_CHILDREN = {
    "researcher": BudgetVector(5, 15, 10_000, 30, 1, 0),
    "coder": BudgetVector(15, 50, 100_000, 120, 2, 1),
    "tester": BudgetVector(10, 35, 50_000, 60, 2, 1),
}


def fig2_forest(coder_tokens: int | None = None, prefix: str = "") -> DelegationForest:
    children = dict(FIG2_CHILDREN)
    if coder_tokens is not None:
        c = children["coder"]
        children["coder"] = BudgetVector(c.iterations, c.tool_calls, coder_tokens, c.seconds, c.retries, c.handoffs)
    nodes = [DelegationNode(prefix + "root", FIG2_ROOT, BudgetVector(), tuple(prefix + n for n in children))]
    nodes += [DelegationNode(prefix + n, b) for n, b in children.items()]
    return DelegationForest(nodes)


@pytest.fixture(scope="session")
def bench200(tmp_path_factory):
    root = tmp_path_factory.mktemp("bench200")
    generate_preset("bench-200", root)
    return root


@pytest.fixture(scope="session")
def bench200_tree(bench200):
    return summarize(build_index(bench200))


def write_files(root, files: dict[str, str]):
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return root


# Acceptance reporting: tests marked ``criterion(n, text)`` get one PASS/FAIL line each.
_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    n, text = props["criterion"]
    if report.when == "call" or report.failed:
        ok = report.passed and _CRITERIA.get(n, (text, True))[1]
        _CRITERIA[n] = (text, ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        text, ok = _CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {n:>2}: {text}")
