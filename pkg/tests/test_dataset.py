import csv
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dalaforge.conllu import clean_corpus
from dalaforge.corruptors import KIND_ORDER, CorruptionKind
from dalaforge.dataset import (
    FIELDS,
    MinimalPair,
    PairedDataset,
    SplitSpec,
    _controlled_rounding,
    build_pairs,
    dataset_records,
    distribution_distances,
    export_dataset,
    kind_distribution,
    read_dataset,
    split_dataset,
    split_distances,
)
from dalaforge.pipeline import applicability_census, iterative_corrupt
from dalaforge.rules import load_rule_pack
from tests import oracles
from tests.builders import random_corpus


def make_pairs(n, seed=0, weights=None):
    """``n`` synthetic pairs with kinds drawn from ``weights`` over the canonical ordering."""
    rng = np.random.default_rng(seed)
    weights = np.ones(len(KIND_ORDER)) if weights is None else np.asarray(weights, dtype=float)
    kinds = rng.choice(len(KIND_ORDER), size=n, p=weights / weights.sum())
    return [MinimalPair(f"p{i:05d}", f"ok {i}", f"bad {i}", KIND_ORDER[k]) for i, k in enumerate(kinds)]


# --- pairs -------------------------------------------------------------------


def test_build_pairs_from_plan():
    corpus = clean_corpus(random_corpus(40, seed=1))[0]
    pack = load_rule_pack()
    plan = iterative_corrupt(corpus, applicability_census(corpus, pack), pack)
    pairs = build_pairs(plan, corpus)
    assert len(pairs) == len(plan)
    for pair, entry in zip(pairs, plan):
        assert pair.pair_id == entry.sentence_id
        assert pair.kind is entry.kind
        assert pair.correct_text == entry.outcome.original_text
        assert pair.corrupted_text == entry.outcome.corrupted_text
    assert build_pairs([], corpus) == []
    assert len(build_pairs(plan[:1], corpus)) == 1


def test_build_pairs_unresolved_id():
    corpus = random_corpus(5, seed=1)
    pack = load_rule_pack()
    plan = iterative_corrupt(corpus, applicability_census(corpus, pack), pack)
    with pytest.raises(KeyError):
        build_pairs(plan, corpus[1:])


def test_pair_must_differ():
    with pytest.raises(ValueError):
        MinimalPair("x", "same", "same", CorruptionKind.BASIC_FLIP)


def test_3828_pairs_is_7656_sentences():
    pairs = make_pairs(3828)
    assert 2 * len(pairs) == 7656


# --- split geometry ----------------------------------------------------------


def test_default_geometry():
    ds = split_dataset(make_pairs(1700), SplitSpec())
    assert (len(ds.train), len(ds.validation), len(ds.test)) == (512, 128, 1024)
    assert ds.sentence_counts() == (1024, 256, 2048)


@pytest.mark.parametrize(
    "geometry, pairs, sentences",
    [
        ("medium", (2296, 193, 1339), (4592, 386, 2678)),
        ("large", (3062, 192, 574), (6124, 384, 1148)),
    ],
)
def test_proportional_geometries_on_3828_pairs(geometry, pairs, sentences):
    ds = split_dataset(make_pairs(3828, seed=3), SplitSpec.geometry(geometry))
    assert (len(ds.train), len(ds.validation), len(ds.test)) == pairs
    assert ds.sentence_counts() == sentences
    assert len(ds) == 3828


def test_deficit_is_reported():
    with pytest.raises(ValueError, match="deficit 64"):
        split_dataset(make_pairs(1600), SplitSpec())


@pytest.mark.parametrize("sizes", [(0.5, 0.5, 0.5), (1, 2), (0.6, 0.05, 35), (0.0, 0.5, 0.5), (-1, 2, 3)])
def test_bad_split_spec(sizes):
    with pytest.raises(ValueError):
        SplitSpec(sizes)


def test_unknown_geometry():
    with pytest.raises(ValueError, match="unknown geometry"):
        SplitSpec.geometry("huge")


def _check_partition(ds, pairs, spec):
    ids = [p.pair_id for name in ("train", "validation", "test") for p in ds.split(name)]
    assert len(ids) == len(set(ids))
    assert set(ids) <= {p.pair_id for p in pairs}
    if not spec.absolute:
        assert set(ids) == {p.pair_id for p in pairs}


@settings(max_examples=40, deadline=None)
@given(
    st.integers(30, 900),
    st.integers(0, 10**6),
    st.sampled_from([(0.6, 0.05, 0.35), (0.8, 0.05, 0.15), (0.5, 0.25, 0.25)]),
    st.lists(st.floats(0.01, 1.0), min_size=16, max_size=16),
)
def test_stratification_within_one_of_proportional(n, seed, sizes, weights):
    pairs = make_pairs(n, seed=seed, weights=weights)
    spec = SplitSpec(sizes, seed=seed)
    ds = split_dataset(pairs, spec)
    _check_partition(ds, pairs, spec)
    targets = spec.targets(n)
    assert (len(ds.train), len(ds.validation), len(ds.test)) == targets
    per_kind = {k: sum(p.kind is k for p in pairs) for k in KIND_ORDER}
    for name, target in zip(("train", "validation", "test"), targets):
        got = {k: sum(p.kind is k for p in ds.split(name)) for k in KIND_ORDER}
        for k in KIND_ORDER:
            assert abs(got[k] - Fraction(per_kind[k] * target, n)) < 1


def test_absolute_split_stratifies_too():
    pairs = make_pairs(3000, seed=4, weights=np.arange(1, 17))
    ds = split_dataset(pairs, SplitSpec(seed=1))
    _check_partition(ds, pairs, SplitSpec())
    for name, target in (("train", 512), ("test", 1024)):
        for k in KIND_ORDER:
            n_k = sum(p.kind is k for p in pairs)
            assert abs(sum(p.kind is k for p in ds.split(name)) - Fraction(n_k * target, 3000)) < 1


def test_split_is_seeded_and_deterministic():
    pairs = make_pairs(2000, seed=2)
    a = split_dataset(pairs, SplitSpec(seed=1))
    assert a == split_dataset(list(reversed(pairs)), SplitSpec(seed=1))
    assert a != split_dataset(pairs, SplitSpec(seed=2))


def test_duplicate_pair_ids_rejected():
    pairs = make_pairs(10)
    with pytest.raises(ValueError):
        split_dataset(pairs + pairs[:1], SplitSpec((0.6, 0.2, 0.2)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 60), min_size=1, max_size=16), st.lists(st.integers(0, 100), min_size=2, max_size=4))
def test_controlled_rounding_property(rows, weights):
    total = sum(rows)
    if total == 0 or sum(weights) == 0:
        return
    # targets summing to total, via floors plus remainder on the last column
    raw = [Fraction(w * total, sum(weights)) for w in weights]
    targets = [math.floor(x) for x in raw[:-1]]
    targets.append(total - sum(targets))
    table = _controlled_rounding(rows, targets)
    assert list(table.sum(axis=1)) == rows
    assert list(table.sum(axis=0)) == targets
    for i, r in enumerate(rows):
        for j, t in enumerate(targets):
            assert abs(table[i, j] - Fraction(r * t, total)) < 1


def test_js_guard_on_default_split():
    # kind shares in the rough shape of a treebank census: some kinds rare, basics common
    weights = [60, 260, 8, 30, 60, 25, 30, 70, 6, 45, 30, 10, 12, 50, 250, 200]
    ds = split_dataset(make_pairs(3828, seed=9, weights=weights), SplitSpec())
    report = split_distances(ds)
    assert report.js_divergence < 0.01


# --- distances ---------------------------------------------------------------


def test_identical_distributions():
    p = [0.2, 0.3, 0.5]
    assert all(v == 0 for v in distribution_distances(p, p).as_dict().values())


def test_disjoint_two_point():
    r = distribution_distances([1, 0], [0, 1])
    assert r.total_variation == 1
    assert r.js_divergence == pytest.approx(math.log(2), abs=1e-15)
    assert r.hellinger == pytest.approx(1.0, abs=1e-15)
    assert r.kl_forward == math.inf and r.kl_backward == math.inf
    assert r.wasserstein == 1


def test_worked_kl_example():
    r = distribution_distances([0.5, 0.5], [0.25, 0.75])
    expected = 0.5 * math.log(2) - 0.5 * math.log(1.5)
    assert r.kl_forward == pytest.approx(expected, abs=1e-12)
    assert round(r.kl_forward, 6) == 0.143841
    assert r.total_variation == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize(
    "p, q",
    [([0.5, 0.6], [0.5, 0.5]), ([0.5, 0.5], [0.5, 0.5, 0.0]), ([1.2, -0.2], [0.5, 0.5]), ([[0.5, 0.5]], [[0.5, 0.5]])],
)
def test_distance_input_errors(p, q):
    with pytest.raises(ValueError):
        distribution_distances(p, q)


def _simplex(size):
    return arrays(np.float64, size, elements=st.floats(0, 1)).filter(lambda a: a.sum() > 0.1).map(lambda a: a / a.sum())


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 16).flatmap(lambda k: st.tuples(_simplex(k), _simplex(k))))
def test_distances_match_oracle(pq):
    p, q = pq
    p, q = list(map(float, p)), list(map(float, q))
    r = distribution_distances(p, q)
    for got, want in [
        (r.kl_forward, oracles.kl(p, q)),
        (r.kl_backward, oracles.kl(q, p)),
        (r.js_divergence, oracles.js(p, q)),
        (r.total_variation, oracles.tv(p, q)),
        (r.hellinger, oracles.hellinger(p, q)),
        (r.wasserstein, oracles.wasserstein(p, q)),
    ]:
        if math.isinf(want):
            assert math.isinf(got)
        else:
            assert got == pytest.approx(want, abs=1e-12)
    assert 0 <= r.js_divergence <= math.log(2) + 1e-12
    assert 0 <= r.total_variation <= 1 + 1e-12
    assert 0 <= r.hellinger <= 1 + 1e-12


# --- export ------------------------------------------------------------------


@pytest.fixture()
def default_ds():
    return split_dataset(make_pairs(1800, seed=5), SplitSpec())


def test_default_dataset_has_3328_records(default_ds):
    records = dataset_records(default_ds)
    assert len(records) == 3328
    assert records[0]["label"] == "correct" and records[1]["label"] == "incorrect"
    assert records[0]["pair_id"] == records[1]["pair_id"]
    assert records[0]["corruption_type"] == ""
    assert records[1]["corruption_type"] in {k.value for k in KIND_ORDER}


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_export_round_trip(tmp_path, default_ds, fmt):
    path = export_dataset(default_ds, fmt, tmp_path)
    assert path.name == f"dala.{fmt}"
    assert read_dataset(path) == default_ds
    raw = path.read_bytes()
    assert not raw.startswith(b"\xef\xbb\xbf")


def test_csv_header_and_quoting(tmp_path):
    tricky = MinimalPair("q1", 'Hun sagde "ja", og gik.', 'Hun sagde "ja", og gikk.', CorruptionKind.SPELLING_ERROR)
    ds = PairedDataset(train=[tricky])
    path = export_dataset(ds, "csv", tmp_path / "x.csv")
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == ",".join(FIELDS)
    assert lines[1].startswith('"Hun sagde ""ja"", og gik."')
    with open(path, encoding="utf-8", newline="") as fh:
        assert [r["text"] for r in csv.DictReader(fh)] == [tricky.correct_text, tricky.corrupted_text]
    assert read_dataset(path) == ds


def test_jsonl_keeps_danish_letters(tmp_path):
    ds = PairedDataset(test=[MinimalPair("d", "Bøgerne ligger på bordet.", "Bøgerne lægger på bordet.", "ligge_laegge")])
    path = export_dataset(ds, "jsonl", tmp_path / "x.jsonl")
    text = path.read_text(encoding="utf-8")
    assert "Bøgerne" in text
    assert [json.loads(line)["split"] for line in text.splitlines()] == ["test", "test"]


def test_export_rejects_unknown_format(tmp_path, default_ds):
    with pytest.raises(ValueError):
        export_dataset(default_ds, "parquet", tmp_path)


def test_export_to_missing_directory_raises(tmp_path, default_ds):
    with pytest.raises(OSError):
        export_dataset(default_ds, "csv", tmp_path / "missing" / "x.csv")


def test_kind_distribution_sums_to_one():
    dist = kind_distribution(make_pairs(100))
    assert dist.shape == (16,) and dist.sum() == pytest.approx(1.0)
    assert kind_distribution([]).sum() == 0
