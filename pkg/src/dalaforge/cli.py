"""Command line interface.

Each command reads its upstream artifacts from the output directory, writes
its own, and records a manifest under ``<out>/manifests/<command>.json``.

Settings resolve in this order: command-line flags, ``DALA_*`` environment
variables, the ``[run]`` section of ``--config``, built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from dalaforge import __version__
from dalaforge.conllu import ConlluError, clean_corpus, parse_conllu, serialize_conllu
from dalaforge.corruptors import KIND_ORDER, CorruptionKind
from dalaforge.dataset import (
    GEOMETRIES,
    SPLITS,
    MinimalPair,
    PairedDataset,
    SplitSpec,
    build_pairs,
    export_dataset,
    split_dataset,
    split_distances,
)
from dalaforge.pipeline import (
    ApplicabilityCensus,
    CorruptionPlanEntry,
    applicability_census,
    iterative_corrupt,
)
from dalaforge.rules import RuleFileError, RulePack, load_rule_pack, parse_sections
from dalaforge.validation import (
    PrecisionEstimate,
    ValidationCounts,
    adjusted_precision,
    ingest_auto_judgments,
    ingest_manual_verdicts,
    sample_for_review,
    validation_report,
    write_worksheet,
)

log = logging.getLogger("dalaforge")

ENV_PREFIX = "DALA_"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_DATA = 4
EXIT_THRESHOLD = 5

COMMANDS = ("clean", "census", "corrupt", "pairs", "split", "export", "distances", "sample-review", "precision", "report")

# artifact file name -> command that produces it
ARTIFACTS = {
    "cleaned.conllu": "clean",
    "census.json": "census",
    "plan.jsonl": "corrupt",
    "pairs.jsonl": "pairs",
    "split.jsonl": "split",
    "validation_counts.json": "sample-review",
    "precision.json": "precision",
}


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    corpus: list[str] = field(default_factory=list)
    rules: str | None = None
    seed: int = 4242
    geometry: str = "default"
    split_sizes: tuple | None = None
    format: str = "csv"
    out: str = "dala_out"
    jobs: int = 1
    js_threshold: float | None = None
    judgments: str | None = None
    verdicts: str | None = None
    review_size: int = 50

    def validate(self) -> None:
        if self.geometry not in GEOMETRIES and self.geometry != "custom":
            raise CliError(f"unknown geometry {self.geometry!r}", EXIT_CONFIG)
        if self.geometry == "custom" and not self.split_sizes:
            raise CliError("geometry 'custom' needs --split-sizes TRAIN,VAL,TEST", EXIT_CONFIG)
        if self.format not in ("csv", "jsonl"):
            raise CliError(f"unknown export format {self.format!r}", EXIT_CONFIG)
        if self.jobs == 0:
            raise CliError("--jobs must be non-zero", EXIT_CONFIG)
        if self.review_size < 1:
            raise CliError("--review-size must be at least 1", EXIT_CONFIG)
        try:
            self.split_spec()
        except ValueError as exc:
            raise CliError(str(exc), EXIT_CONFIG) from None

    def split_spec(self) -> SplitSpec:
        if self.geometry == "custom":
            return SplitSpec(tuple(self.split_sizes), self.seed)
        return SplitSpec.geometry(self.geometry, self.seed)


def _parse_sizes(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise CliError(f"split sizes need three comma-separated values, got {text!r}", EXIT_CONFIG)
    try:
        if all(p.isdigit() for p in parts):
            return tuple(int(p) for p in parts)
        return tuple(float(p) for p in parts)
    except ValueError:
        raise CliError(f"bad split sizes {text!r}", EXIT_CONFIG) from None


_CONVERTERS = {
    "seed": int,
    "jobs": int,
    "review_size": int,
    "js_threshold": float,
    "split_sizes": _parse_sizes,
}


def _convert(key: str, value: str):
    try:
        return _CONVERTERS.get(key, str)(value)
    except ValueError:
        raise CliError(f"bad value for {key}: {value!r}", EXIT_CONFIG) from None


def _config_file_values(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
        sections = parse_sections(text, path)
    except (OSError, RuleFileError) as exc:
        raise CliError(f"cannot read config: {exc}", EXIT_CONFIG) from None
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values: dict = {}
    for header, entries in sections:
        if header != "run":
            raise CliError(f"{path}: unknown config section [{header}]", EXIT_CONFIG)
        for line_no, cols in entries:
            if len(cols) != 2 or cols[0] not in known:
                raise CliError(f"{path}:{line_no}: expected '<setting><TAB><value>' with a known setting", EXIT_CONFIG)
            key, value = cols
            if key == "corpus":
                values.setdefault("corpus", []).append(value)
            else:
                values[key] = _convert(key, value)
    return values


def _env_values() -> dict:
    values = {}
    for f in dataclasses.fields(RunConfig):
        raw = os.environ.get(ENV_PREFIX + f.name.upper())
        if raw is None:
            continue
        values[f.name] = raw.split(os.pathsep) if f.name == "corpus" else _convert(f.name, raw)
    return values


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(_config_file_values(args.config))
    values.update(_env_values())
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None and flag != []:
            values[f.name] = flag
    config = RunConfig(**values)
    config.validate()
    return config


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key-sectioned config file with a [run] section")
    common.add_argument("--corpus", action="append", help="CoNLL-U input file (repeatable)")
    common.add_argument("--rules", help="rule file overriding/extending the built-in rule pack")
    common.add_argument("--seed", type=int)
    common.add_argument("--geometry", choices=sorted(GEOMETRIES) + ["custom"])
    common.add_argument("--split-sizes", dest="split_sizes", type=_parse_sizes, help="TRAIN,VAL,TEST counts or proportions")
    common.add_argument("--format", choices=("csv", "jsonl"))
    common.add_argument("--out", help="output directory (default: dala_out)")
    common.add_argument("--jobs", type=int, help="worker processes; outputs do not depend on it")
    common.add_argument("--js-threshold", dest="js_threshold", type=float)
    common.add_argument("--judgments", help="checker judgment TSV (sample-review)")
    common.add_argument("--verdicts", help="reviewer verdict TSV (precision)")
    common.add_argument("--review-size", dest="review_size", type=int, help="sentences to review per kind")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dalaforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    return parser


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.out = Path(config.out)
        self.inputs: dict[str, Path] = {}
        self.outputs: list[Path] = []
        self._pack: RulePack | None = None

    @property
    def pack(self) -> RulePack:
        if self._pack is None:
            try:
                self._pack = load_rule_pack(self.config.rules)
            except (OSError, RuleFileError) as exc:
                raise CliError(f"cannot load rules: {exc}", EXIT_DATA) from None
        return self._pack

    def artifact(self, name: str) -> Path:
        path = self.out / name
        if not path.exists():
            raise CliError(
                f"missing {path}; run `dalaforge {ARTIFACTS[name]}` with the same --out first", EXIT_MISSING_ARTIFACT
            )
        self.inputs[name] = path
        return path

    def external(self, label: str, value: str | None, flag: str) -> Path:
        if not value:
            raise CliError(f"`{self.command}` needs {flag}", EXIT_CONFIG)
        path = Path(value)
        if not path.exists():
            raise CliError(f"{flag} file not found: {path}", EXIT_DATA)
        self.inputs[label] = path
        return path

    def write(self, name: str, text: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.outputs.append(path)
        return path

    def manifest(self, extra: dict | None = None) -> None:
        record = {
            "command": self.command,
            "version": __version__,
            "seed": self.config.seed,
            "rules_digest": self.pack.digest(),
            "config": {k: v for k, v in dataclasses.asdict(self.config).items() if k != "out"},
            "inputs": {label: {"path": str(p), "sha256": _sha256(p)} for label, p in sorted(self.inputs.items())},
            "outputs": {p.name: _sha256(p) for p in self.outputs},
        }
        if extra:
            record.update(extra)
        directory = self.out / "manifests"
        directory.mkdir(parents=True, exist_ok=True)
        (directory / f"{self.command}.json").write_text(json.dumps(record, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _dump_jsonl(rows) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in rows)


def _load_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _load_corpus(run: Run):
    with open(run.artifact("cleaned.conllu"), encoding="utf-8") as fh:
        return parse_conllu(fh)


def _load_plan(run: Run) -> list[CorruptionPlanEntry]:
    return [CorruptionPlanEntry.from_json(r) for r in _load_jsonl(run.artifact("plan.jsonl"))]


def _load_split(run: Run) -> PairedDataset:
    ds = PairedDataset()
    for row in _load_jsonl(run.artifact("split.jsonl")):
        ds.split(row.pop("split")).append(MinimalPair.from_json(row))
    return ds


def cmd_clean(run: Run) -> None:
    if not run.config.corpus:
        raise CliError("`clean` needs at least one --corpus file", EXIT_CONFIG)
    sentences = []
    structural = 0
    for i, name in enumerate(run.config.corpus):
        path = run.external(f"corpus[{i}]", name, "--corpus")
        with open(path, encoding="utf-8") as fh:
            parsed = parse_conllu(fh)
        structural += parsed.structural_rejects
        sentences.extend(parsed)
    sentences = type(parsed)(sentences, structural)
    kept, report = clean_corpus(sentences)
    run.write("cleaned.conllu", serialize_conllu(kept))
    run.write("cleaning_report.json", json.dumps(report.as_dict(), indent=2) + "\n")
    log.info("cleaned %d -> %d sentences", report.input_count, report.output_count)


def cmd_census(run: Run) -> None:
    corpus = _load_corpus(run)
    census = applicability_census(corpus, run.pack, n_jobs=run.config.jobs)
    run.write("census.json", json.dumps(census.to_json(), ensure_ascii=False) + "\n")
    run.write("census.tsv", census.to_table())


def cmd_corrupt(run: Run) -> None:
    corpus = _load_corpus(run)
    census = ApplicabilityCensus.from_json(json.loads(run.artifact("census.json").read_text(encoding="utf-8")))
    plan = iterative_corrupt(corpus, census, run.pack, run.config.seed, n_jobs=run.config.jobs)
    run.write("plan.jsonl", _dump_jsonl(e.to_json() for e in plan))
    log.info("corrupted %d of %d sentences", len(plan), len(corpus))


def cmd_pairs(run: Run) -> None:
    pairs = build_pairs(_load_plan(run), _load_corpus(run))
    run.write("pairs.jsonl", _dump_jsonl(p.to_json() for p in pairs))


def cmd_split(run: Run) -> None:
    pairs = [MinimalPair.from_json(r) for r in _load_jsonl(run.artifact("pairs.jsonl"))]
    ds = split_dataset(pairs, run.config.split_spec())
    rows = [dict(p.to_json(), split=name) for name in SPLITS for p in ds.split(name)]
    run.write("split.jsonl", _dump_jsonl(rows))
    log.info("split sizes (pairs): %s", [len(ds.split(s)) for s in SPLITS])


def cmd_export(run: Run) -> None:
    ds = _load_split(run)
    run.out.mkdir(parents=True, exist_ok=True)
    path = export_dataset(ds, run.config.format, run.out / f"dala.{run.config.format}")
    run.outputs.append(path)


def cmd_distances(run: Run) -> int:
    report = split_distances(_load_split(run))
    threshold = run.config.js_threshold if run.config.js_threshold is not None else run.pack.js_threshold
    passed = report.js_divergence < threshold
    payload = dict(report.as_dict(), js_threshold=threshold, passed=passed)
    run.write("distances.json", json.dumps(payload, indent=2) + "\n")
    for name, value in report.as_dict().items():
        print(f"{name}\t{value:.6f}")
    if not passed:
        log.error("train/test JS divergence %.6f >= threshold %.6f", report.js_divergence, threshold)
        return EXIT_THRESHOLD
    return EXIT_OK


def _counts_to_json(counts: dict) -> list[dict]:
    rows = []
    for c in counts.values():
        row = dataclasses.asdict(c)
        row["kind"] = c.kind.value
        row["fp_auto_ids"] = list(c.fp_auto_ids)
        rows.append(row)
    return rows


def _counts_from_json(rows) -> dict:
    out = {}
    for row in rows:
        row = dict(row, kind=CorruptionKind(row["kind"]), fp_auto_ids=tuple(row["fp_auto_ids"]))
        out[row["kind"]] = ValidationCounts(**row)
    return out


def cmd_sample_review(run: Run) -> None:
    outcomes = [e.outcome for e in _load_plan(run)]
    judgments = run.external("judgments", run.config.judgments, "--judgments")
    # a kind without a [categories:<kind>] section accepts its own identifier
    accepted = {k.value: {k.value} for k in KIND_ORDER}
    accepted.update(run.pack.categories)
    counts = ingest_auto_judgments(judgments, outcomes, accepted)
    rows = sample_for_review(counts, outcomes, run.config.review_size, run.config.seed)
    run.write("validation_counts.json", json.dumps(_counts_to_json(counts), indent=2, ensure_ascii=False) + "\n")
    run.out.mkdir(parents=True, exist_ok=True)
    write_worksheet(rows, run.out / "review.tsv")
    run.outputs.append(run.out / "review.tsv")
    log.info("review worksheet with %d rows", len(rows))


def cmd_precision(run: Run) -> None:
    counts = _counts_from_json(json.loads(run.artifact("validation_counts.json").read_text(encoding="utf-8")))
    verdicts = run.external("verdicts", run.config.verdicts, "--verdicts")
    counts = ingest_manual_verdicts(counts, verdicts)
    estimates = [adjusted_precision(c) for c in counts.values()]
    payload = {
        "counts": _counts_to_json(counts),
        "estimates": [dict(dataclasses.asdict(e), kind=e.kind.value) for e in estimates],
    }
    run.write("precision.json", json.dumps(payload, indent=2, ensure_ascii=False) + "\n")


def cmd_report(run: Run) -> None:
    payload = json.loads(run.artifact("precision.json").read_text(encoding="utf-8"))
    counts = _counts_from_json(payload["counts"])
    estimates = [PrecisionEstimate(**dict(e, kind=CorruptionKind(e["kind"]))) for e in payload["estimates"]]
    table, companion = validation_report(estimates, counts)
    run.write("report.txt", table)
    run.write("report.csv", companion)
    print(table, end="")


HANDLERS = {
    "clean": cmd_clean,
    "census": cmd_census,
    "corrupt": cmd_corrupt,
    "pairs": cmd_pairs,
    "split": cmd_split,
    "export": cmd_export,
    "distances": cmd_distances,
    "sample-review": cmd_sample_review,
    "precision": cmd_precision,
    "report": cmd_report,
}


def run_command(name: str, config: RunConfig) -> int:
    run = Run(name, config)
    status = HANDLERS[name](run) or EXIT_OK
    run.manifest()
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        config = resolve_config(args)
        return run_command(args.command, config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConlluError, RuleFileError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
