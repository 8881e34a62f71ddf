"""Minimal pairs, stratified splits, kind-distribution distances and export."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from dalaforge.conllu import AnnotatedSentence, render_text
from dalaforge.corruptors import KIND_ORDER, CorruptionKind

SPLITS = ("train", "validation", "test")
FIELDS = ("text", "label", "corruption_type", "pair_id", "split")

GEOMETRIES = {
    "default": (512, 128, 1024),
    "medium": (0.6, 0.05, 0.35),
    "large": (0.8, 0.05, 0.15),
}


@dataclass(frozen=True)
class MinimalPair:
    pair_id: str
    correct_text: str
    corrupted_text: str
    kind: CorruptionKind

    def __post_init__(self):
        if self.correct_text == self.corrupted_text:
            raise ValueError(f"pair {self.pair_id!r}: corrupted text equals the correct text")
        object.__setattr__(self, "kind", CorruptionKind(self.kind))

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "correct_text": self.correct_text,
            "corrupted_text": self.corrupted_text,
            "kind": self.kind.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> MinimalPair:
        return cls(data["pair_id"], data["correct_text"], data["corrupted_text"], CorruptionKind(data["kind"]))


@dataclass(frozen=True)
class SplitSpec:
    """Split sizes for (train, validation, test): all pair counts, or all proportions."""

    sizes: tuple = GEOMETRIES["default"]
    seed: int = 4242

    def __post_init__(self):
        sizes = tuple(self.sizes)
        if len(sizes) != 3:
            raise ValueError("split sizes need three entries: train, validation, test")
        object.__setattr__(self, "sizes", sizes)
        if all(isinstance(s, (int, np.integer)) and not isinstance(s, bool) for s in sizes):
            if any(s < 0 for s in sizes):
                raise ValueError(f"negative split size in {sizes}")
        elif all(isinstance(s, (int, float)) for s in sizes):
            if any(not 0 < s < 1 for s in sizes):
                raise ValueError(f"split proportions must lie in (0, 1), got {sizes}")
            if abs(sum(sizes) - 1.0) > 1e-9:
                raise ValueError(f"split proportions must sum to 1, got {sum(sizes)}")
        else:
            raise ValueError(f"split sizes must be all integers or all proportions, got {sizes}")

    @classmethod
    def geometry(cls, name: str, seed: int = 4242) -> SplitSpec:
        try:
            return cls(GEOMETRIES[name], seed)
        except KeyError:
            raise ValueError(f"unknown geometry {name!r}; choose from {sorted(GEOMETRIES)}") from None

    @property
    def absolute(self) -> bool:
        return all(isinstance(s, (int, np.integer)) for s in self.sizes)

    def targets(self, available: int) -> tuple[int, int, int]:
        """Pair counts per split for ``available`` pairs.

        Proportional geometries floor the train and test shares and hand the
        remainder to validation, which reproduces the published Medium and
        Large sample counts.
        """
        if self.absolute:
            needed = sum(self.sizes)
            if needed > available:
                raise ValueError(f"split needs {needed} pairs but only {available} are available (deficit {needed - available})")
            return tuple(int(s) for s in self.sizes)
        train, _, test = (Fraction(repr(float(s))) for s in self.sizes)
        n_train = math.floor(train * available)
        n_test = math.floor(test * available)
        return n_train, available - n_train - n_test, n_test


@dataclass
class PairedDataset:
    train: list[MinimalPair] = field(default_factory=list)
    validation: list[MinimalPair] = field(default_factory=list)
    test: list[MinimalPair] = field(default_factory=list)

    def split(self, name: str) -> list[MinimalPair]:
        if name not in SPLITS:
            raise KeyError(name)
        return getattr(self, name)

    def __len__(self) -> int:
        return sum(len(self.split(s)) for s in SPLITS)

    def sentence_counts(self) -> tuple[int, int, int]:
        return tuple(2 * len(self.split(s)) for s in SPLITS)

    def kind_distribution(self, name: str) -> np.ndarray:
        return kind_distribution(self.split(name))


@dataclass(frozen=True)
class DistanceReport:
    kl_forward: float
    kl_backward: float
    js_divergence: float
    total_variation: float
    wasserstein: float
    hellinger: float

    def as_dict(self) -> dict[str, float]:
        return dict(self.__dict__)


def build_pairs(plan, corpus: Iterable[AnnotatedSentence]) -> list[MinimalPair]:
    """One minimal pair per plan entry, keyed by sentence id."""
    by_id = {s.id: s for s in corpus}
    pairs = []
    for entry in plan:
        sentence = by_id.get(entry.sentence_id)
        if sentence is None:
            raise KeyError(f"plan entry {entry.sentence_id!r} does not resolve in the corpus")
        pairs.append(MinimalPair(entry.sentence_id, render_text(sentence), entry.outcome.corrupted_text, entry.kind))
    return pairs


def kind_distribution(pairs: Iterable[MinimalPair]) -> np.ndarray:
    """Share of each corruption kind, over the canonical kind ordering."""
    counts = Counter(p.kind for p in pairs)
    vec = np.array([counts.get(k, 0) for k in KIND_ORDER], dtype=float)
    total = vec.sum()
    return vec / total if total else vec


def _controlled_rounding(rows: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Integer table with row sums ``rows`` and column sums ``targets``.

    Every cell is the floor or the ceiling of its proportional share
    ``rows[i] * targets[j] / sum(rows)``. Leftover units go where the
    fractional parts are largest, solved as a min-cost flow.
    """
    total = sum(rows)
    ideal = [[Fraction(r * t, total) for t in targets] for r in rows]
    table = np.array([[math.floor(x) for x in row] for row in ideal], dtype=int)
    row_need = np.asarray(rows) - table.sum(axis=1)
    col_need = np.asarray(targets) - table.sum(axis=0)
    if not row_need.any():
        return table

    graph = nx.DiGraph()
    graph.add_node("source", demand=-int(row_need.sum()))
    graph.add_node("sink", demand=int(col_need.sum()))
    for i, need in enumerate(row_need):
        if need:
            graph.add_edge("source", ("row", i), capacity=int(need), weight=0)
            for j, x in enumerate(ideal[i]):
                frac = x - math.floor(x)
                if frac > 0:
                    graph.add_edge(("row", i), ("col", j), capacity=1, weight=-int(frac * 10**9))
    for j, need in enumerate(col_need):
        if need:
            graph.add_edge(("col", j), "sink", capacity=int(need), weight=0)
    flow = nx.min_cost_flow(graph)
    for i in range(len(rows)):
        for node, units in flow.get(("row", i), {}).items():
            table[i, node[1]] += units
    return table


def split_dataset(pairs: Sequence[MinimalPair], spec: SplitSpec = SplitSpec()) -> PairedDataset:
    """Stratified split: every kind is spread over the splits in proportion to the split sizes."""
    pairs = list(pairs)
    ids = [p.pair_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise ValueError("pair ids must be unique")
    targets = list(spec.targets(len(pairs)))
    if spec.absolute:
        targets.append(len(pairs) - sum(targets))  # pairs left out of the dataset

    by_kind = defaultdict(list)
    for p in pairs:
        by_kind[p.kind].append(p)
    kinds = [k for k in KIND_ORDER if k in by_kind]
    if not kinds:
        return PairedDataset()
    table = _controlled_rounding([len(by_kind[k]) for k in kinds], targets)

    buckets = {name: [] for name in SPLITS}
    for row, kind in zip(table, kinds):
        members = sorted(by_kind[kind], key=lambda p: p.pair_id)
        order = np.random.default_rng([int(spec.seed), kind.position]).permutation(len(members))
        members = [members[i] for i in order]
        start = 0
        for name, count in zip(SPLITS, row):
            buckets[name].extend(members[start : start + count])
            start += count
    return PairedDataset(**{name: sorted(b, key=lambda p: p.pair_id) for name, b in buckets.items()})


def _validate_distribution(p: np.ndarray, name: str) -> None:
    if p.ndim != 1:
        raise ValueError(f"{name} must be a 1-d probability vector")
    if (p < 0).any():
        raise ValueError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} sums to {p.sum()!r}, not 1")


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    support = p > 0
    if (q[support] == 0).any():
        return math.inf
    # difference of logs, so a subnormal q cannot overflow the ratio
    return float(np.sum(p[support] * (np.log(p[support]) - np.log(q[support]))))


def distribution_distances(p, q) -> DistanceReport:
    """Divergences between two categorical distributions (natural log).

    Wasserstein-1 treats the categories as points 0, 1, 2, ... on a line.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    _validate_distribution(p, "p")
    _validate_distribution(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"distributions differ in length: {p.size} vs {q.size}")
    m = (p + q) / 2
    js = 0.5 * _kl(p, m) + 0.5 * _kl(q, m)
    return DistanceReport(
        kl_forward=_kl(p, q),
        kl_backward=_kl(q, p),
        js_divergence=max(js, 0.0),
        total_variation=float(0.5 * np.abs(p - q).sum()),
        wasserstein=float(np.abs(np.cumsum(p) - np.cumsum(q)).sum()),
        hellinger=float(np.sqrt(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2) / 2)),
    )


def split_distances(ds: PairedDataset, a: str = "train", b: str = "test") -> DistanceReport:
    return distribution_distances(ds.kind_distribution(a), ds.kind_distribution(b))


def dataset_records(ds: PairedDataset) -> list[dict[str, str]]:
    records = []
    for name in SPLITS:
        for pair in sorted(ds.split(name), key=lambda p: p.pair_id):
            records.append(
                {"text": pair.correct_text, "label": "correct", "corruption_type": "", "pair_id": pair.pair_id, "split": name}
            )
            records.append(
                {
                    "text": pair.corrupted_text,
                    "label": "incorrect",
                    "corruption_type": pair.kind.value,
                    "pair_id": pair.pair_id,
                    "split": name,
                }
            )
    return records


def export_dataset(ds: PairedDataset, format: str, destination: str | Path) -> Path:
    """Write one record per sentence as CSV or JSONL.

    ``destination`` is a file path, or an existing directory in which
    ``dala.<format>`` is created. Returns the written path.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unsupported export format {format!r}")
    path = Path(destination)
    if path.is_dir():
        path = path / f"dala.{format}"
    records = dataset_records(ds)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if format == "csv":
            writer = csv.DictWriter(fh, fieldnames=FIELDS)
            writer.writeheader()
            writer.writerows(records)
        else:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    return path


def read_dataset(path: str | Path) -> PairedDataset:
    """Re-import a CSV/JSONL export."""
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        if path.suffix == ".csv":
            records = list(csv.DictReader(fh))
        else:
            records = [json.loads(line) for line in fh if line.strip()]

    halves: dict[tuple[str, str], dict[str, dict]] = {}
    for record in records:
        halves.setdefault((record["split"], record["pair_id"]), {})[record["label"]] = record
    ds = PairedDataset()
    for (split, pair_id), pair in halves.items():
        if set(pair) != {"correct", "incorrect"}:
            raise ValueError(f"pair {pair_id!r} in {path} is incomplete")
        ds.split(split).append(
            MinimalPair(
                pair_id,
                pair["correct"]["text"],
                pair["incorrect"]["text"],
                CorruptionKind(pair["incorrect"]["corruption_type"]),
            )
        )
    for name in SPLITS:
        ds.split(name).sort(key=lambda p: p.pair_id)
    return ds
