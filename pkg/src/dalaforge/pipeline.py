"""Applicability census and rarest-first iterative corruption."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from dalaforge.conllu import AnnotatedSentence
from dalaforge.corruptors import (
    CORRUPTORS,
    KIND_ORDER,
    CorruptionKind,
    CorruptionOutcome,
)
from dalaforge.rules import RulePack, load_rule_pack


def check_corpus(corpus, *, allow_empty: bool = False) -> list[AnnotatedSentence]:
    """Validate a corpus argument: a sequence of sentences with unique ids."""
    if isinstance(corpus, (str, bytes)):
        raise TypeError("expected a sequence of AnnotatedSentence, got a string")
    corpus = list(corpus)
    if not corpus and not allow_empty:
        raise ValueError("corpus is empty")
    seen = set()
    for s in corpus:
        if not isinstance(s, AnnotatedSentence):
            raise TypeError(f"expected AnnotatedSentence, got {type(s).__name__}")
        if s.id in seen:
            raise ValueError(f"duplicate sentence id {s.id!r}")
        seen.add(s.id)
    return corpus


def sentence_rng(seed: int, ordinal: int) -> np.random.Generator:
    """Independent stream per sentence, so worker count never changes results."""
    return np.random.default_rng([int(seed), int(ordinal)])


def _chunked_map(func: Callable, items: Sequence, n_jobs: int | None) -> list:
    if not n_jobs or n_jobs == 1 or len(items) < 2:
        return func(items, 0)
    n_chunks = min(len(items), abs(n_jobs) * 4 if n_jobs > 0 else 32)
    bounds = np.linspace(0, len(items), n_chunks + 1).astype(int)
    parts = Parallel(n_jobs=n_jobs)(
        delayed(func)(items[lo:hi], lo) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
    )
    return [x for part in parts for x in part]


@dataclass(frozen=True)
class ApplicabilityCensus:
    counts: Mapping[CorruptionKind, int]
    corpus_size: int
    sentence_ids: tuple[str, ...] = ()

    def fraction(self, kind: CorruptionKind) -> float:
        return self.counts.get(kind, 0) / self.corpus_size

    @property
    def fractions(self) -> dict[CorruptionKind, float]:
        return {k: self.fraction(k) for k in self.counts}

    def order(self) -> list[CorruptionKind]:
        """Kinds rarest first; equal fractions fall back to canonical kind order."""
        return sorted(self.counts, key=lambda k: (self.counts[k], k.position))

    def to_table(self) -> str:
        rows = sorted(self.counts, key=lambda k: (-self.counts[k], k.position))
        lines = ["kind\tfraction"]
        lines += [f"{k.value}\t{self.fraction(k):.6f}" for k in rows]
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "corpus_size": self.corpus_size,
            "counts": {k.value: self.counts[k] for k in sorted(self.counts, key=lambda k: k.position)},
            "sentence_ids": list(self.sentence_ids),
        }

    @classmethod
    def from_json(cls, data: dict) -> ApplicabilityCensus:
        return cls(
            counts={CorruptionKind(k): int(v) for k, v in data["counts"].items()},
            corpus_size=int(data["corpus_size"]),
            sentence_ids=tuple(data.get("sentence_ids", ())),
        )


@dataclass(frozen=True)
class CorruptionPlanEntry:
    sentence_id: str
    kind: CorruptionKind
    outcome: CorruptionOutcome

    def to_json(self) -> dict:
        return self.outcome.to_json()

    @classmethod
    def from_json(cls, data: dict) -> CorruptionPlanEntry:
        outcome = CorruptionOutcome.from_json(data)
        return cls(outcome.sentence_id, outcome.kind, outcome)


def _resolve_kinds(kinds: Iterable[CorruptionKind] | None) -> list[CorruptionKind]:
    if kinds is None:
        return list(KIND_ORDER)
    return sorted({CorruptionKind(k) for k in kinds}, key=lambda k: k.position)


def applicability_census(
    corpus: Sequence[AnnotatedSentence],
    pack: RulePack,
    *,
    kinds: Iterable[CorruptionKind] | None = None,
    n_jobs: int | None = 1,
) -> ApplicabilityCensus:
    """Count, per kind, the sentences with at least one candidate site. Rows overlap."""
    corpus = check_corpus(corpus)
    kinds = _resolve_kinds(kinds)

    def flags(chunk, offset):
        return [[CORRUPTORS[k].applicable(s, pack) for k in kinds] for s in chunk]

    matrix = _chunked_map(flags, corpus, n_jobs)
    totals = np.asarray(matrix, dtype=int).sum(axis=0) if matrix else np.zeros(len(kinds), dtype=int)
    return ApplicabilityCensus(
        counts={k: int(c) for k, c in zip(kinds, totals)},
        corpus_size=len(corpus),
        sentence_ids=tuple(s.id for s in corpus),
    )


def _check_census(corpus: list[AnnotatedSentence], census: ApplicabilityCensus) -> None:
    if not census.sentence_ids:
        if census.corpus_size != len(corpus):
            raise ValueError(f"census covers {census.corpus_size} sentences, corpus has {len(corpus)}")
        return
    known = set(census.sentence_ids)
    for s in corpus:
        if s.id not in known:
            raise ValueError(f"sentence {s.id!r} is not covered by the census; recompute it for this corpus")
    if len(known) != len(corpus):
        raise ValueError(f"census covers {len(known)} sentences, corpus has {len(corpus)}; recompute it")


def iterative_corrupt(
    corpus: Sequence[AnnotatedSentence],
    census: ApplicabilityCensus,
    pack: RulePack,
    seed: int = 4242,
    *,
    n_jobs: int | None = 1,
) -> list[CorruptionPlanEntry]:
    """Give each sentence the rarest applicable corruption kind.

    Kinds are ranked by census fraction. Each sentence takes the first kind in
    that ranking with a candidate site, which yields the same plan as running
    the rarest kind over the whole corpus first and moving on to the next
    kind with the sentences still untouched.
    """
    corpus = check_corpus(corpus, allow_empty=True)
    _check_census(corpus, census)
    order = census.order()

    def corrupt(chunk, offset):
        entries = []
        for ordinal, sentence in enumerate(chunk, start=offset):
            for kind in order:
                corruptor = CORRUPTORS[kind]
                sites = corruptor.candidates(sentence, pack)
                if sites:
                    outcome = corruptor.choose(sentence, sites, sentence_rng(seed, ordinal))
                    entries.append(CorruptionPlanEntry(sentence.id, kind, outcome))
                    break
        return entries

    return _chunked_map(corrupt, corpus, n_jobs)


class IterativeCorruptor(BaseEstimator, TransformerMixin):
    """Estimator front end: ``fit`` takes the census, ``transform`` builds the plan.

    Parameters
    ----------
    rules : RulePack, path or None
        Rule pack, rule-file path, or None for the built-in defaults.
    seed : int
        Global seed from which every per-sentence stream is derived.
    kinds : iterable of CorruptionKind or None
        Restrict the corruption kinds in play. None means all sixteen.
    n_jobs : int
        Worker processes; results do not depend on it.

    Attributes
    ----------
    pack_ : RulePack
    census_ : ApplicabilityCensus
    kind_order_ : list of CorruptionKind, rarest first
    """

    def __init__(self, rules=None, seed=4242, kinds=None, n_jobs=1):
        self.rules = rules
        self.seed = seed
        self.kinds = kinds
        self.n_jobs = n_jobs

    def _pack(self) -> RulePack:
        return self.rules if isinstance(self.rules, RulePack) else load_rule_pack(self.rules)

    def fit(self, X, y=None):
        self.pack_ = self._pack()
        self.census_ = applicability_census(X, self.pack_, kinds=self.kinds, n_jobs=self.n_jobs)
        self.kind_order_ = self.census_.order()
        return self

    def transform(self, X):
        check_is_fitted(self, ["census_", "pack_"])
        return iterative_corrupt(X, self.census_, self.pack_, self.seed, n_jobs=self.n_jobs)
