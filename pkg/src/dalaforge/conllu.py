"""CoNLL-U ingestion, surface rendering and corpus cleaning."""

from __future__ import annotations

import io
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, TextIO

from sklearn.base import BaseEstimator, TransformerMixin

PAIRED_DELIMITERS = (("(", ")"), ("[", "]"), ("«", "»"))
SYMMETRIC_DELIMITERS = ('"',)
TERMINAL_PUNCT = frozenset(".!?")


class ConlluError(ValueError):
    """Raised for malformed CoNLL-U input. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class AnnotatedToken:
    index: int
    form: str
    lemma: str
    upos: str
    feats: Mapping[str, str] = field(default_factory=dict)
    head: int = 0
    deprel: str = "_"
    space_after: bool = True

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"token index must be >= 1, got {self.index}")
        if not self.form:
            raise ValueError(f"token {self.index} has an empty form")

    def feat(self, name: str) -> str | None:
        return self.feats.get(name)

    @property
    def relation(self) -> str:
        """Universal relation without its language-specific subtype (``nsubj:pass`` -> ``nsubj``)."""
        return self.deprel.split(":", 1)[0]


@dataclass(frozen=True)
class AnnotatedSentence:
    id: str
    tokens: tuple[AnnotatedToken, ...]
    raw_text: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        n = len(self.tokens)
        for position, token in enumerate(self.tokens, start=1):
            if token.index != position:
                raise ValueError(
                    f"sentence {self.id!r}: token ids must run 1..{n}, found {token.index} at position {position}"
                )
            if not 0 <= token.head <= n:
                raise ValueError(f"sentence {self.id!r}: head {token.head} of token {position} out of range")

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, index: int) -> AnnotatedToken:
        """1-based token access, mirroring CoNLL-U ids."""
        return self.tokens[index - 1]

    @property
    def text(self) -> str:
        return render_text(self)

    def dependents(self, index: int) -> list[AnnotatedToken]:
        return [t for t in self.tokens if t.head == index]


@dataclass(frozen=True)
class CleaningReport:
    input_count: int = 0
    deduplicated: int = 0
    too_short: int = 0
    too_simple: int = 0
    char_bounds: int = 0
    ambiguous_punct: int = 0
    structural_rejects: int = 0
    output_count: int = 0

    @property
    def rejected(self) -> int:
        return sum(getattr(self, f.name) for f in fields(self) if f.name not in ("input_count", "output_count"))

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class ParsedCorpus(list):
    """List of sentences that remembers how many blocks were dropped while parsing."""

    def __init__(self, sentences: Iterable[AnnotatedSentence] = (), structural_rejects: int = 0):
        super().__init__(sentences)
        self.structural_rejects = structural_rejects


def render_forms(forms: Iterable[str], spaces: Iterable[bool]) -> str:
    forms = list(forms)
    spaces = list(spaces)
    parts = []
    for i, form in enumerate(forms):
        parts.append(form)
        if i < len(forms) - 1 and spaces[i]:
            parts.append(" ")
    return "".join(parts)


def render_text(sentence: AnnotatedSentence) -> str:
    """Join token forms, inserting one space after every token flagged ``space_after`` except the last."""
    return render_forms((t.form for t in sentence.tokens), (t.space_after for t in sentence.tokens))


def _parse_feats(column: str, line_no: int) -> dict[str, str]:
    if column == "_":
        return {}
    feats = {}
    for item in column.split("|"):
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise ConlluError(f"malformed feature {item!r}", line_no)
        feats[name] = value
    return feats


def _format_feats(feats: Mapping[str, str]) -> str:
    if not feats:
        return "_"
    return "|".join(f"{k}={feats[k]}" for k in sorted(feats, key=str.lower))


def _space_after(misc: str) -> bool:
    if misc == "_":
        return True
    return "SpaceAfter=No" not in misc.split("|")


def parse_conllu(source: TextIO | str) -> ParsedCorpus:
    """Parse CoNLL-U text into sentences.

    Blocks with multiword-token ranges (``3-4``), empty nodes (``3.1``) or a
    ``# text`` comment that the tokens do not reproduce are dropped and counted
    in ``structural_rejects`` of the returned list.
    """
    if isinstance(source, str):
        source = io.StringIO(source)

    sentences = ParsedCorpus()
    comments: dict[str, str] = {}
    rows: list[tuple[int, list[str]]] = []
    structural = False
    block_start = 0

    def flush():
        nonlocal structural
        if rows or structural:
            if structural:
                sentences.structural_rejects += 1
            else:
                sentence = _build_sentence(comments, rows, block_start, len(sentences) + 1)
                if sentence is None:
                    sentences.structural_rejects += 1
                else:
                    sentences.append(sentence)
        comments.clear()
        rows.clear()
        structural = False

    for line_no, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            flush()
            continue
        if not rows and not comments and not structural:
            block_start = line_no
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                comments[key.strip()] = value.strip()
            continue
        columns = line.split("\t")
        if len(columns) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, found {len(columns)}", line_no)
        token_id = columns[0]
        if "-" in token_id or "." in token_id:
            structural = True
            continue
        rows.append((line_no, columns))
    flush()
    return sentences


def _build_sentence(comments, rows, block_start, ordinal) -> AnnotatedSentence | None:
    tokens = []
    n = len(rows)
    for position, (line_no, cols) in enumerate(rows, start=1):
        try:
            index = int(cols[0])
        except ValueError:
            raise ConlluError(f"token id {cols[0]!r} is not an integer", line_no) from None
        if index != position:
            raise ConlluError(f"token id {index} out of sequence (expected {position})", line_no)
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"head {cols[6]!r} is not an integer", line_no) from None
        if not 0 <= head <= n or head == index:
            raise ConlluError(f"inconsistent head index {head} for token {index}", line_no)
        if not cols[1]:
            raise ConlluError("empty form", line_no)
        tokens.append(
            AnnotatedToken(
                index=index,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                feats=_parse_feats(cols[5], line_no),
                head=head,
                deprel=cols[7],
                space_after=_space_after(cols[9]),
            )
        )
    sent_id = comments.get("sent_id") or f"s{ordinal}@{block_start}"
    raw_text = comments.get("text")
    sentence = AnnotatedSentence(id=sent_id, tokens=tuple(tokens), raw_text=raw_text)
    if raw_text is not None and render_text(sentence) != raw_text:
        return None
    return sentence


def serialize_conllu(sentences: Iterable[AnnotatedSentence]) -> str:
    """Write sentences back out as CoNLL-U. XPOS, DEPS and non-spacing MISC values are not kept."""
    out = []
    for sentence in sentences:
        out.append(f"# sent_id = {sentence.id}")
        out.append(f"# text = {sentence.raw_text if sentence.raw_text is not None else render_text(sentence)}")
        for t in sentence.tokens:
            misc = "_" if t.space_after else "SpaceAfter=No"
            out.append(
                "\t".join(
                    [str(t.index), t.form, t.lemma, t.upos, "_", _format_feats(t.feats), str(t.head), t.deprel, "_", misc]
                )
            )
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def has_ambiguous_punctuation(sentence: AnnotatedSentence) -> bool:
    """Unbalanced paired delimiters, or sentence-final punctuation before the closing punctuation run."""
    text = render_text(sentence)
    for opening, closing in PAIRED_DELIMITERS:
        if text.count(opening) != text.count(closing):
            return True
    for mark in SYMMETRIC_DELIMITERS:
        if text.count(mark) % 2:
            return True

    # trailing run of punctuation tokens, e.g. `! "` at the end of a quote
    end = len(sentence.tokens)
    while end > 0 and sentence.tokens[end - 1].upos == "PUNCT":
        end -= 1
    for token in sentence.tokens[:end]:
        if set(token.form) <= TERMINAL_PUNCT:
            return True
    trailing = sentence.tokens[end:]
    terminal_positions = [i for i, t in enumerate(trailing) if set(t.form) <= TERMINAL_PUNCT]
    # two separate terminal marks in the closing run (`. " !`) also split the sentence
    return len(terminal_positions) > 1 and terminal_positions[-1] - terminal_positions[0] > 1


def clean_corpus(
    sentences: Iterable[AnnotatedSentence],
    *,
    min_tokens: int = 5,
    min_upos: int = 5,
    min_chars: int = 2,
    max_chars: int = 5000,
) -> tuple[list[AnnotatedSentence], CleaningReport]:
    """Apply the corpus filters in order: duplicates, length, POS variety, character bounds, punctuation.

    Each rejected sentence is counted once, under the first filter it fails.
    """
    structural = getattr(sentences, "structural_rejects", 0)
    sentences = list(sentences)
    counts = dict.fromkeys(("deduplicated", "too_short", "too_simple", "char_bounds", "ambiguous_punct"), 0)
    seen: set[str] = set()
    kept = []
    for sentence in sentences:
        text = render_text(sentence)
        if text in seen:
            counts["deduplicated"] += 1
            continue
        seen.add(text)
        if len(sentence.tokens) < min_tokens:
            counts["too_short"] += 1
        elif len({t.upos for t in sentence.tokens}) < min_upos:
            counts["too_simple"] += 1
        elif not min_chars <= len(text) <= max_chars:
            counts["char_bounds"] += 1
        elif has_ambiguous_punctuation(sentence):
            counts["ambiguous_punct"] += 1
        else:
            kept.append(sentence)
    report = CleaningReport(
        input_count=len(sentences) + structural,
        structural_rejects=structural,
        output_count=len(kept),
        **counts,
    )
    return kept, report


class CorpusCleaner(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapper around :func:`clean_corpus`.

    The report of the last ``transform`` call is stored in ``report_``.
    """

    def __init__(self, min_tokens=5, min_upos=5, min_chars=2, max_chars=5000):
        self.min_tokens = min_tokens
        self.min_upos = min_upos
        self.min_chars = min_chars
        self.max_chars = max_chars

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        kept, self.report_ = clean_corpus(
            X,
            min_tokens=self.min_tokens,
            min_upos=self.min_upos,
            min_chars=self.min_chars,
            max_chars=self.max_chars,
        )
        return kept
