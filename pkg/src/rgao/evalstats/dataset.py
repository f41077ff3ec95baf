"""Regenerable routing dataset: tiny repositories whose shape fixes the right topology.

Each instance pairs a task text with a repository descriptor.  The
repository is rebuilt on demand from the descriptor alone, so the JSONL file
is the whole dataset.  A configurable share of task texts is written to trip
a keyword router: scope words that do not match the real work.
"""

from __future__ import annotations

import json
import random
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

from rgao.router import TopologyKind

LABELS = (TopologyKind.FAST_PATH, TopologyKind.SUB_AGENT, TopologyKind.MULTI_AGENT, TopologyKind.DEEP_RESEARCH)
DEFAULT_MIX = (0.38, 0.29, 0.21, 0.12)
DEFAULT_N = 250
DEFAULT_TUNE = 100
DEFAULT_SEED = 0
DEFAULT_ADVERSARIAL = 0.35

DOMAINS = ("invoice", "ledger", "shipment", "catalog", "payroll", "ticket", "inventory", "booking",
           "voucher", "parcel", "tariff", "rental")
ACTIONS = ("parse", "compute", "validate", "render", "load", "store", "merge", "format", "export", "index")
NOUNS = ("total", "record", "entry", "batch", "summary", "line")
GROUPS = ("core", "api", "storage", "jobs")
# Vocabulary guaranteed absent from every generated repository.
FOREIGN = ("telemetry", "exporter", "websocket", "kerberos", "heartbeat", "spans", "quorum", "shard",
           "gossip", "backpressure", "memtable", "tombstone", "watermark", "jitter")


@dataclass(frozen=True, slots=True)
class RepoDescriptor:
    seed: int
    files: int
    cross_edges: int
    depth: int

    def __post_init__(self) -> None:
        if self.files < 1 or self.cross_edges < 0 or self.depth not in (0, 1, 2):
            raise ValueError(f"invalid repository descriptor {self}")
        if self.depth == 0 and self.files != 1:
            raise ValueError("root-level repositories hold exactly one file")


@dataclass(frozen=True, slots=True)
class RoutingInstance:
    id: str
    task: str
    repo: RepoDescriptor
    oracle: TopologyKind
    split: str
    adversarial: bool = False

    def to_json(self) -> dict:
        return {"id": self.id, "task": self.task, "repo": asdict(self.repo), "oracle": self.oracle.value,
                "split": self.split, "adversarial": self.adversarial}

    @classmethod
    def from_json(cls, obj: dict) -> RoutingInstance:
        return cls(obj["id"], obj["task"], RepoDescriptor(**obj["repo"]), TopologyKind(obj["oracle"]),
                   obj["split"], bool(obj.get("adversarial", False)))


# -- repository layout ------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FunctionSpec:
    name: str
    doc: str
    calls: tuple[tuple[str, str], ...]  # (module path, function name)


@dataclass(frozen=True, slots=True)
class FileSpec:
    path: str
    module: str
    doc: str
    functions: tuple[FunctionSpec, ...]


def _groups_for(files: int) -> int:
    return min(len(GROUPS), max(2, files // 3))


def repo_layout(desc: RepoDescriptor) -> tuple[str, list[FileSpec]]:
    """Domain word and file specs for ``desc``; a pure function of the descriptor."""
    rng = random.Random(f"repo:{desc.seed}")
    domain = rng.choice(DOMAINS)
    actions = rng.sample(ACTIONS, min(desc.files, len(ACTIONS)))
    actions += [f"{ACTIONS[i % len(ACTIONS)]}{i}" for i in range(len(actions), desc.files)]
    nouns = rng.sample(NOUNS, 3)
    n_groups = _groups_for(desc.files) if desc.depth == 2 else 1
    slots: list[tuple[str, str]] = []  # (dir, module stem)
    for i, action in enumerate(actions):
        stem = f"{domain}_{action}"
        if desc.depth == 0:
            slots.append(("", stem))
        elif desc.depth == 1:
            slots.append((domain, stem))
        else:
            slots.append((f"src/{GROUPS[i % n_groups]}", stem))

    def mod(i: int) -> str:
        d, stem = slots[i]
        return ".".join(p for p in (*d.split("/"), stem) if p and p != "src")

    fn = [[f"{actions[i]}_{domain}_{noun}" for noun in nouns] for i in range(desc.files)]
    calls: list[list[list[tuple[str, str]]]] = [[[] for _ in nouns] for _ in range(desc.files)]
    # Within each file the second function calls the first.
    for i in range(desc.files):
        calls[i][1].append((mod(i), fn[i][0]))
    # Same-directory chain: a file's first function calls the previous file's first function.
    for i in range(1, desc.files):
        if slots[i][0] == slots[i - 1][0] and desc.depth == 1:
            calls[i][0].append((mod(i - 1), fn[i - 1][0]))
    # Cross-directory couplings from the third function.
    if desc.depth == 2 and desc.files > 1:
        pairs = [(i, j) for i in range(desc.files) for j in range(desc.files) if slots[i][0] != slots[j][0]]
        for i, j in rng.sample(pairs, min(desc.cross_edges, len(pairs))):
            calls[i][2].append((mod(j), fn[j][1]))

    files = []
    for i, (d, stem) in enumerate(slots):
        path = f"{d}/{stem}.py" if d else f"{stem}.py"
        funcs = tuple(
            FunctionSpec(fn[i][k], f"{actions[i].rstrip('0123456789').title()} the {domain} {nouns[k]}.",
                         tuple(calls[i][k]))
            for k in range(len(nouns)))
        files.append(FileSpec(path, mod(i), f"{domain.title()} {actions[i]} helpers.", funcs))
    return domain, files


def _render(spec: FileSpec) -> str:
    lines = [f'"""{spec.doc}"""', ""]
    imports = sorted({(m, f) for fs in spec.functions for m, f in fs.calls if m != spec.module})
    lines += [f"from {m} import {f}" for m, f in imports]
    if imports:
        lines.append("")
    for fs in spec.functions:
        lines += ["", f"def {fs.name}(record):", f'    """{fs.doc}"""', "    value = record"]
        lines += [f"    value = {f}(value)" for _m, f in fs.calls]
        lines += ["    return value", ""]
    return "\n".join(lines).rstrip() + "\n"


def materialize_repo(desc: RepoDescriptor, dest: str | Path) -> Path:
    root = Path(dest)
    for spec in repo_layout(desc)[1]:
        target = root / spec.path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(_render(spec), encoding="utf-8")
    return root


# -- tasks ------------------------------------------------------------------------

# Templates that a keyword table routes correctly, then ones built to fool it.
_TEMPLATES: dict[TopologyKind, tuple[tuple[str, ...], tuple[str, ...]]] = {
    TopologyKind.FAST_PATH: (
        ("rename the record argument of {fn}", "tweak the docstring of {fn}",
         "correct the return value of {fn}"),
        ("implement the {noun} tweak in {fn} then rerun the pipeline",
         "investigate the docstring wording in {fn}",
         "review and fix the {noun} constant in {fn}"),
    ),
    TopologyKind.SUB_AGENT: (
        ("fix the {noun} handling in {fn} and {fn2}", "refactor {fn} to reuse {fn2}",
         "add a guard for empty {domain} {noun} values in {fn}"),
        ("find where {fn} reads the {noun} and adjust {fn2}",
         "rework {fn} and {fn2} for blank {domain} {noun} values"),
    ),
    TopologyKind.MULTI_AGENT: (
        ("implement {domain} {noun} rounding across every module then test it",
         "refactor the {domain} {noun} flow across modules then add tests"),
        ("update the {domain} {noun} and {noun2} handling in every {domain} module",
         "rename the {domain} {noun} field everywhere in the {domain} code"),
    ),
    TopologyKind.DEEP_RESEARCH: (
        ("investigate why the {f1} {f2} drops {f3} intermittently",
         "research how {f1} {f2} interacts with {f3}"),
        ("fix the flaky {f1} {f2} timeouts under {f3}",
         "why would {f1} {f2} stall when {f3} grows"),
    ),
}


def _descriptor(label: TopologyKind, rng: random.Random) -> RepoDescriptor:
    seed = rng.randrange(2**31)
    if label is TopologyKind.FAST_PATH:
        return RepoDescriptor(seed, 1, 0, 0)
    if label is TopologyKind.SUB_AGENT:
        return RepoDescriptor(seed, rng.randint(2, 3), 0, 1)
    if label is TopologyKind.MULTI_AGENT:
        return RepoDescriptor(seed, rng.randint(6, 10), rng.randint(3, 6), 2)
    files = rng.choice((1, 2, 3, 6))
    return RepoDescriptor(seed, files, 3 if files > 3 else 0, 0 if files == 1 else (1 if files <= 3 else 2))


def _task_text(label: TopologyKind, desc: RepoDescriptor, adversarial: bool, rng: random.Random) -> str:
    domain, files = repo_layout(desc)
    template = rng.choice(_TEMPLATES[label][1 if adversarial else 0])
    fns = [f.name for spec in files for f in spec.functions]
    nouns = sorted({f.name.rsplit("_", 1)[1] for f in files[0].functions})
    f1, f2, f3 = rng.sample(FOREIGN, 3)
    target = files[0].functions
    return template.format(fn=target[1].name, fn2=(files[1].functions[0].name if len(files) > 1 else target[0].name),
                           noun=nouns[0], noun2=nouns[1], domain=domain, f1=f1, f2=f2, f3=f3, any=rng.choice(fns))


def apportion(n: int, weights: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment; ties go to the smaller share, then the earlier label."""
    fr = [Fraction(str(w)) for w in weights]
    total = sum(fr)
    if total <= 0 or any(w < 0 for w in fr):
        raise ValueError("weights must be non-negative with a positive sum")
    quotas = [n * w / total for w in fr]
    counts = [int(q) for q in quotas]
    by_remainder = sorted(range(len(fr)), key=lambda i: (-(quotas[i] - counts[i]), counts[i], i))
    for i in by_remainder[: n - sum(counts)]:
        counts[i] += 1
    return counts


def generate_routing_dataset(seed: int = DEFAULT_SEED, n: int = DEFAULT_N,
                             mix: Sequence[float] = DEFAULT_MIX, *, tune: int | None = None,
                             adversarial_fraction: float = DEFAULT_ADVERSARIAL) -> list[RoutingInstance]:
    """A pure function of its arguments; labels are apportioned exactly and split stratified."""
    if len(mix) != len(LABELS):
        raise ValueError(f"mix needs {len(LABELS)} weights")
    if abs(sum(mix) - 1.0) > 1e-6:
        raise ValueError("mix must sum to 1")
    if not 0.0 <= adversarial_fraction <= 1.0:
        raise ValueError("adversarial_fraction must lie in [0, 1]")
    tune = round(n * DEFAULT_TUNE / DEFAULT_N) if tune is None else tune
    if not 0 <= tune <= n:
        raise ValueError("tune split must fit inside n")
    rng = random.Random(f"routing:{seed}")
    counts = apportion(n, mix)
    tune_counts = apportion(tune, counts) if n else [0] * len(LABELS)
    rows: list[tuple[TopologyKind, str, bool]] = []
    for label, count, tune_count in zip(LABELS, counts, tune_counts):
        n_adv = round(count * adversarial_fraction)
        flags = [True] * n_adv + [False] * (count - n_adv)
        rng.shuffle(flags)
        splits = ["tune"] * tune_count + ["eval"] * (count - tune_count)
        rng.shuffle(splits)
        rows += [(label, s, f) for s, f in zip(splits, flags)]
    rng.shuffle(rows)
    out = []
    for i, (label, split, adv) in enumerate(rows):
        desc = _descriptor(label, rng)
        out.append(RoutingInstance(f"r{i:04d}", _task_text(label, desc, adv, rng), desc, label, split, adv))
    return out


def dump_jsonl(instances: Iterable[RoutingInstance], path: str | Path) -> None:
    text = "".join(json.dumps(inst.to_json(), sort_keys=True) + "\n" for inst in instances)
    Path(path).write_text(text, encoding="utf-8")


def load_jsonl(path: str | Path) -> list[RoutingInstance]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [RoutingInstance.from_json(json.loads(line)) for line in lines if line.strip()]
