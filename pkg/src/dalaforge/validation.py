"""Hybrid corruption-quality validation.

An external grammar checker's output arrives as a judgment file. Sentences it
misses (or files under the wrong category) are sampled for manual review, and
the manual hit rate on that sample is extrapolated to all misses to give an
adjusted precision per corruption kind.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from dalaforge.corruptors import CorruptionKind, CorruptionOutcome

VERDICTS = ("intended_error_present", "still_acceptable", "other")
WORKSHEET_FIELDS = ("sentence_id", "kind", "original_text", "corrupted_text", "verdict", "comment")
DEFAULT_EXCLUDED = frozenset({CorruptionKind.SPELLING_ERROR})


@dataclass(frozen=True)
class AutoJudgment:
    sentence_id: str
    detected: bool
    error_category: str = ""


@dataclass(frozen=True)
class ManualVerdict:
    sentence_id: str
    verdict: str
    comment: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r} for {self.sentence_id!r}; expected one of {VERDICTS}")


@dataclass(frozen=True)
class ValidationCounts:
    kind: CorruptionKind
    n_corruptions: int
    tp_auto: int = 0
    fp_auto: int = 0
    tp_man: int = 0
    fp_man: int = 0
    fp_auto_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.tp_auto + self.fp_auto != self.n_corruptions:
            raise ValueError(f"{self.kind}: tp_auto + fp_auto must equal n_corruptions")
        if min(self.n_corruptions, self.tp_auto, self.fp_auto, self.tp_man, self.fp_man) < 0:
            raise ValueError(f"{self.kind}: counts must be non-negative")


@dataclass(frozen=True)
class PrecisionEstimate:
    kind: CorruptionKind
    prec_auto: float
    tp_new: float
    prec_new: float
    n_corruptions: int = 0


def _read_tsv(source: TextIO | str | Path) -> list[tuple[int, list[str]]]:
    if isinstance(source, Path) or (isinstance(source, str) and "\t" not in source and "\n" not in source):
        text = Path(source).read_text(encoding="utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    rows = []
    for line_no, line in enumerate(io.StringIO(text), start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#") or line.startswith("sentence_id\t"):
            continue
        rows.append((line_no, line.split("\t")))
    return rows


def read_judgments(source) -> list[AutoJudgment]:
    """Parse ``sentence_id<TAB>detected(0/1)<TAB>error_category`` lines."""
    judgments = []
    for line_no, cols in _read_tsv(source):
        if len(cols) not in (2, 3) or cols[1] not in ("0", "1"):
            raise ValueError(f"judgment line {line_no}: expected 'id<TAB>0|1<TAB>category', got {cols!r}")
        judgments.append(AutoJudgment(cols[0], cols[1] == "1", cols[2] if len(cols) == 3 else ""))
    return judgments


def read_verdicts(source) -> list[ManualVerdict]:
    """Parse ``sentence_id<TAB>verdict<TAB>comment`` lines (a filled-in worksheet also works)."""
    verdicts = []
    for line_no, cols in _read_tsv(source):
        if len(cols) == len(WORKSHEET_FIELDS):
            cols = [cols[0], cols[4], cols[5]]
        if len(cols) not in (2, 3):
            raise ValueError(f"verdict line {line_no}: expected 'id<TAB>verdict<TAB>comment', got {cols!r}")
        if not cols[1]:
            continue  # row not reviewed yet
        try:
            verdicts.append(ManualVerdict(cols[0], cols[1], cols[2] if len(cols) == 3 else ""))
        except ValueError as exc:
            raise ValueError(f"verdict line {line_no}: {exc}") from None
    return verdicts


def ingest_auto_judgments(
    judgments: Iterable[AutoJudgment] | TextIO | str | Path,
    outcomes: Iterable[CorruptionOutcome],
    kind_category_map: Mapping[str, Iterable[str]],
    *,
    exclude: Iterable[CorruptionKind] = DEFAULT_EXCLUDED,
) -> dict[CorruptionKind, ValidationCounts]:
    """Count checker hits per kind.

    A corrupted sentence is an automatic true positive only when the checker
    flagged it under one of the categories accepted for its kind.
    """
    if not isinstance(judgments, (list, tuple)):
        judgments = read_judgments(judgments)
    excluded = {CorruptionKind(k) for k in exclude}
    by_id = {o.sentence_id: o for o in outcomes if o.kind not in excluded}
    accepted = {CorruptionKind(k): frozenset(v) for k, v in kind_category_map.items()}

    unmapped = sorted({o.kind.value for o in by_id.values()} - {k.value for k in accepted})
    if unmapped:
        raise ValueError(f"no accepted checker categories for kinds: {', '.join(unmapped)}")

    tp: dict[CorruptionKind, int] = {}
    fp: dict[CorruptionKind, list[str]] = {}
    seen = set()
    for j in judgments:
        outcome = by_id.get(j.sentence_id)
        if outcome is None:
            raise KeyError(f"judgment for unknown or excluded sentence {j.sentence_id!r}")
        if j.sentence_id in seen:
            raise ValueError(f"duplicate judgment for {j.sentence_id!r}")
        seen.add(j.sentence_id)
        if j.detected and j.error_category in accepted[outcome.kind]:
            tp[outcome.kind] = tp.get(outcome.kind, 0) + 1
        else:
            fp.setdefault(outcome.kind, []).append(j.sentence_id)

    kinds = sorted(set(tp) | set(fp), key=lambda k: k.position)
    return {
        k: ValidationCounts(
            kind=k,
            n_corruptions=tp.get(k, 0) + len(fp.get(k, ())),
            tp_auto=tp.get(k, 0),
            fp_auto=len(fp.get(k, ())),
            fp_auto_ids=tuple(sorted(fp.get(k, ()))),
        )
        for k in kinds
    }


def sample_for_review(
    counts: Mapping[CorruptionKind, ValidationCounts],
    outcomes: Iterable[CorruptionOutcome],
    n_per_kind: int,
    seed: int = 4242,
) -> list[dict[str, str]]:
    """Draw up to ``n_per_kind`` automatic misses per kind, without replacement."""
    if n_per_kind < 1:
        raise ValueError("n_per_kind must be at least 1")
    by_id = {o.sentence_id: o for o in outcomes}
    rows = []
    for kind in sorted(counts, key=lambda k: k.position):
        ids = counts[kind].fp_auto_ids
        take = min(n_per_kind, len(ids))
        if not take:
            continue
        rng = np.random.default_rng([int(seed), kind.position])
        chosen = sorted(ids[i] for i in rng.choice(len(ids), size=take, replace=False))
        for sid in chosen:
            o = by_id[sid]
            rows.append(
                {
                    "sentence_id": sid,
                    "kind": kind.value,
                    "original_text": o.original_text,
                    "corrupted_text": o.corrupted_text,
                    "verdict": "",
                    "comment": "",
                }
            )
    return rows


def write_worksheet(rows: Sequence[Mapping[str, str]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=WORKSHEET_FIELDS, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_NONE, escapechar="\\")
        writer.writeheader()
        writer.writerows(rows)


def ingest_manual_verdicts(
    counts: Mapping[CorruptionKind, ValidationCounts],
    verdicts: Iterable[ManualVerdict] | TextIO | str | Path,
) -> dict[CorruptionKind, ValidationCounts]:
    """Fold reviewer verdicts into the counts.

    Only ``intended_error_present`` counts as a manual true positive; both
    ``still_acceptable`` and ``other`` count against the corruption.
    """
    if not isinstance(verdicts, (list, tuple)):
        verdicts = read_verdicts(verdicts)
    owner = {sid: kind for kind, c in counts.items() for sid in c.fp_auto_ids}
    tp: dict[CorruptionKind, int] = {}
    fp: dict[CorruptionKind, int] = {}
    seen = set()
    for v in verdicts:
        kind = owner.get(v.sentence_id)
        if kind is None:
            raise KeyError(f"verdict for {v.sentence_id!r}, which is not an automatic miss")
        if v.sentence_id in seen:
            raise ValueError(f"duplicate verdict for {v.sentence_id!r}")
        seen.add(v.sentence_id)
        bucket = tp if v.verdict == "intended_error_present" else fp
        bucket[kind] = bucket.get(kind, 0) + 1
    return {k: replace(c, tp_man=tp.get(k, 0), fp_man=fp.get(k, 0)) for k, c in counts.items()}


def adjusted_precision(counts: ValidationCounts) -> PrecisionEstimate:
    """Extrapolate the manual hit rate over all automatic misses.

    ``tp_new = tp_man / (tp_man + fp_man) * fp_auto + tp_auto`` and
    ``prec_new = tp_new / n_corruptions``.
    """
    n = counts.n_corruptions
    if n == 0:
        raise ValueError(f"{counts.kind}: no corruptions to estimate precision from")
    reviewed = counts.tp_man + counts.fp_man
    if reviewed > counts.fp_auto:
        raise ValueError(f"{counts.kind}: {reviewed} manual verdicts exceed the {counts.fp_auto} automatic misses")
    if counts.fp_auto and not reviewed:
        raise ValueError(f"{counts.kind}: {counts.fp_auto} automatic misses but no manual verdicts")
    tp_new = Fraction(counts.tp_auto)
    if counts.fp_auto:
        tp_new += Fraction(counts.tp_man, reviewed) * counts.fp_auto
    return PrecisionEstimate(
        kind=counts.kind,
        prec_auto=counts.tp_auto / n,
        tp_new=float(tp_new),
        prec_new=float(tp_new / n),
        n_corruptions=n,
    )


def format_precision(value: float) -> str:
    """Three decimals, round-half-even, trailing zeros dropped: 1.0, 0.8, 0.962."""
    rounded = Decimal(repr(value)).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN)
    text = f"{rounded:f}".rstrip("0")
    return text + "0" if text.endswith(".") else text


def validation_report(
    estimates: Iterable[PrecisionEstimate],
    counts: Mapping[CorruptionKind, ValidationCounts] | None = None,
) -> tuple[str, str]:
    """Render the precision table (text) and its CSV companion, best precision first."""
    rows = sorted(estimates, key=lambda e: (-e.prec_new, e.kind.position))
    header = ("Corruption Type", "Precision")
    body = [(e.kind.label, format_precision(e.prec_new)) for e in rows]
    width = max([len(header[0])] + [len(r[0]) for r in body])
    lines = [f"{header[0]:<{width}}  {header[1]}"]
    lines += [f"{label:<{width}}  {value}" for label, value in body]
    table = "\n".join(lines) + "\n"

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "n_corruptions", "tp_auto", "fp_auto", "tp_man", "fp_man", "prec_auto", "prec_new"])
    for e in rows:
        c = (counts or {}).get(e.kind)
        writer.writerow(
            [
                e.kind.value,
                e.n_corruptions,
                c.tp_auto if c else "",
                c.fp_auto if c else "",
                c.tp_man if c else "",
                c.fp_man if c else "",
                f"{e.prec_auto:.6f}",
                f"{e.prec_new:.6f}",
            ]
        )
    return table, buf.getvalue()
