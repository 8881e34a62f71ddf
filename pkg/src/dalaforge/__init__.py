"""Build Danish linguistic-acceptability minimal-pair datasets from CoNLL-U corpora."""

from dalaforge.conllu import (
    AnnotatedSentence,
    AnnotatedToken,
    CleaningReport,
    ConlluError,
    CorpusCleaner,
    clean_corpus,
    parse_conllu,
    render_text,
    serialize_conllu,
)
from dalaforge.corruptors import CORRUPTORS, CorruptionKind, CorruptionOutcome
from dalaforge.dataset import (
    DistanceReport,
    MinimalPair,
    PairedDataset,
    SplitSpec,
    build_pairs,
    distribution_distances,
    export_dataset,
    read_dataset,
    split_dataset,
)
from dalaforge.pipeline import (
    ApplicabilityCensus,
    CorruptionPlanEntry,
    IterativeCorruptor,
    applicability_census,
    iterative_corrupt,
)
from dalaforge.rules import RuleFileError, RulePack, load_rule_pack
from dalaforge.validation import (
    PrecisionEstimate,
    ValidationCounts,
    adjusted_precision,
    ingest_auto_judgments,
    ingest_manual_verdicts,
    sample_for_review,
    validation_report,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedSentence",
    "AnnotatedToken",
    "ApplicabilityCensus",
    "CORRUPTORS",
    "CleaningReport",
    "ConlluError",
    "CorpusCleaner",
    "CorruptionKind",
    "CorruptionOutcome",
    "CorruptionPlanEntry",
    "DistanceReport",
    "IterativeCorruptor",
    "MinimalPair",
    "PairedDataset",
    "PrecisionEstimate",
    "RuleFileError",
    "RulePack",
    "SplitSpec",
    "ValidationCounts",
    "adjusted_precision",
    "applicability_census",
    "build_pairs",
    "clean_corpus",
    "distribution_distances",
    "export_dataset",
    "ingest_auto_judgments",
    "ingest_manual_verdicts",
    "iterative_corrupt",
    "load_rule_pack",
    "parse_conllu",
    "read_dataset",
    "render_text",
    "sample_for_review",
    "serialize_conllu",
    "split_dataset",
    "validation_report",
]
