"""Deterministic synthetic Python repositories of a known shape.

Every package holds up to ``files_per_package`` modules.  Each module has two
imports, one constant, one class with three methods and two functions (nine
symbols); the last module of each package drops its loader function (eight
symbols).  The 200-file preset therefore indexes to
``1 + 11 + 200 + 1790 = 2002`` nodes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

TOPICS = ("auth", "cache", "billing", "parser", "router", "storage", "metrics", "session", "config", "search")
NOUNS = ("tokens", "handlers", "models", "views", "utils", "client", "server", "schema", "loader", "writer",
         "reader", "codec", "policy", "worker", "queue", "store", "index", "filters", "hooks", "events")
FILES_PER_PACKAGE = 20
PRESETS = {"bench-50": 50, "bench-100": 100, "bench-200": 200}


@dataclass(frozen=True)
class SyntheticRepo:
    root: Path
    files: int
    packages: int
    symbols: int

    @property
    def expected_nodes(self) -> int:
        # root + "src" + packages + files + symbols
        return 1 + 1 + self.packages + self.files + self.symbols


def _package_name(p: int) -> str:
    base = TOPICS[p % len(TOPICS)]
    return base if p < len(TOPICS) else f"{base}{p // len(TOPICS)}"


def _package_sizes(n_files: int, per_package: int) -> list[int]:
    n_packages = max(1, math.ceil(n_files / per_package))
    sizes = [per_package] * n_packages
    sizes[-1] = n_files - per_package * (n_packages - 1)
    return sizes


def _module_source(pkg: str, noun: str, prev_mod: tuple[str, str], cross_mod: tuple[str, str],
                   with_loader: bool, seed: int) -> str:
    tag = f"{pkg}_{noun}"
    cls = f"{pkg.title()}{noun.title()}Handler"
    limit = f"LIMIT_{tag.upper()}"
    p_pkg, p_noun = prev_mod
    c_pkg, c_noun = cross_mod
    lines = [
        f'"""{pkg.title()} {noun}: helpers for {pkg} {noun} processing."""',
        f"from src.{p_pkg}.{p_noun} import compute_{p_pkg}_{p_noun}",
        f"from src.{c_pkg}.{c_noun} import compute_{c_pkg}_{c_noun}",
        "",
        f"{limit} = {(seed * 7 + len(tag) * 13) % 97 + 3}",
        "",
        "",
        f"class {cls}:",
        f'    """Handle {pkg} {noun} requests."""',
        "",
        f"    def __init__(self, limit={limit}):",
        "        self.limit = limit",
        "        self.seen = []",
        "",
        "    def process(self, item):",
        f'        """Process one {noun} item and record it."""',
        "        self.seen.append(item)",
        f"        return compute_{p_pkg}_{p_noun}(item) + self.limit",
        "",
        "    def validate(self, item):",
        f"        return compute_{c_pkg}_{c_noun}(item) >= 0",
        "",
        "",
        f"def compute_{tag}(value):",
        f'    """Compute the {pkg} {noun} score for ``value``."""',
        "    total = 0",
        "    for step in range(3):",
        f"        total += (value + step) % {limit}",
        "    return total",
    ]
    if with_loader:
        lines += [
            "",
            "",
            f"def load_{tag}(key):",
            f'    """Load a {noun} entry by key."""',
            f"    handler = {cls}()",
            f"    return handler.limit + compute_{tag}(len(str(key)))",
        ]
    return "\n".join(lines) + "\n"


def generate_repo(dest: str | os.PathLike[str], n_files: int, *, seed: int = 0,
                  files_per_package: int = FILES_PER_PACKAGE) -> SyntheticRepo:
    if n_files < 1:
        raise ValueError("n_files must be >= 1")
    if not 1 <= files_per_package <= len(NOUNS):
        raise ValueError(f"files_per_package must be in [1, {len(NOUNS)}]")
    root = Path(dest)
    sizes = _package_sizes(n_files, files_per_package)
    packages = [_package_name(p) for p in range(len(sizes))]
    symbols = 0
    for p, (pkg, size) in enumerate(zip(packages, sizes)):
        pkg_dir = root / "src" / pkg
        pkg_dir.mkdir(parents=True, exist_ok=True)
        for m in range(size):
            noun = NOUNS[m]
            prev_mod = (pkg, NOUNS[(m - 1) % size])
            q = (p + 1) % len(packages)
            cross_mod = (packages[q], NOUNS[m % sizes[q]])
            with_loader = m != size - 1
            symbols += 9 if with_loader else 8
            (pkg_dir / f"{noun}.py").write_text(
                _module_source(pkg, noun, prev_mod, cross_mod, with_loader, seed + p * 31 + m),
                encoding="utf-8")
    return SyntheticRepo(root, n_files, len(packages), symbols)


def generate_preset(name: str, dest: str | os.PathLike[str], *, seed: int = 0) -> SyntheticRepo:
    try:
        n = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    return generate_repo(dest, n, seed=seed)
