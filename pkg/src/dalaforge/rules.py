"""Danish linguistic knowledge as data, plus the plain-text rule-file loader.

Rule files are UTF-8 text split into sections::

    # comment
    [swap:indefinite_article]
    en	et

    [suffix:ende_ene]
    ene	ende	NOUN
    ende	ene	VERB,ADJ

    [lexicon]
    appelsin	applesin

    [categories:genitive]
    GENITIVE_APOSTROPHE

    [constants]
    js_threshold	0.01

Entries are tab separated. A suffix entry may carry a third column of
comma-separated UPOS tags and a fourth of ``Feat=Value|...`` constraints.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping


class RuleFileError(ValueError):
    pass


def match_case(form: str, template: str) -> str:
    """Give ``form`` the first-letter capitalization of ``template``.

    Inherently upper-case words (the pronoun ``I``, acronyms) keep their case.
    """
    if not form or not template:
        return form
    if form.isupper():
        return form
    if template[0].isupper():
        return form[0].upper() + form[1:]
    return form[0].lower() + form[1:]


def lookup_key(form: str) -> str:
    # "I" (2nd person plural) must not collide with the preposition "i"
    return form if form == "I" else form.lower()


@dataclass(frozen=True)
class SwapTable:
    """Bidirectional form table. Lookups ignore case; replacements keep it."""

    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        seen: dict[str, str] = {}
        for a, b in self.pairs:
            if lookup_key(a) == lookup_key(b):
                raise RuleFileError(f"swap entry {a!r} -> {b!r} maps a form to itself")
            for x, y in ((a, b), (b, a)):
                key = lookup_key(x)
                if key in seen and seen[key] != y:
                    raise RuleFileError(f"swap entry {a!r} -> {b!r} is not an involution ({x!r} already maps to {seen[key]!r})")
                seen[key] = y
        object.__setattr__(self, "_map", seen)

    @classmethod
    def of(cls, *pairs: tuple[str, str]) -> SwapTable:
        return cls(tuple(pairs))

    def __contains__(self, form: str) -> bool:
        return lookup_key(form) in self._map

    def __len__(self) -> int:
        return len(self.pairs)

    def swap(self, form: str) -> str | None:
        target = self._map.get(lookup_key(form))
        return None if target is None else match_case(target, form)

    def merged(self, pairs: Iterable[tuple[str, str]]) -> SwapTable:
        pairs = list(pairs)
        # validate the new entries on their own before they displace defaults
        SwapTable(tuple(pairs))
        touched = {lookup_key(x) for p in pairs for x in p}
        kept = [p for p in self.pairs if not touched & {lookup_key(p[0]), lookup_key(p[1])}]
        return SwapTable(tuple(kept + [p for p in pairs if p not in kept]))


@dataclass(frozen=True)
class SuffixRule:
    match_suffix: str
    replace_suffix: str
    required_upos: frozenset[str] = frozenset()
    required_feats: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.match_suffix:
            raise RuleFileError("suffix rule with empty match suffix")
        if self.match_suffix == self.replace_suffix:
            raise RuleFileError(f"suffix rule -{self.match_suffix} -> -{self.replace_suffix} changes nothing")
        object.__setattr__(self, "required_upos", frozenset(self.required_upos))
        object.__setattr__(self, "required_feats", tuple(sorted(dict(self.required_feats).items())))

    def matches(self, form: str, upos: str, feats: Mapping[str, str]) -> bool:
        if self.required_upos and upos not in self.required_upos:
            return False
        if any(feats.get(k) != v for k, v in self.required_feats):
            return False
        # the stem left after removing the suffix must be non-empty
        return len(form) > len(self.match_suffix) and form.lower().endswith(self.match_suffix)

    def apply(self, form: str) -> str:
        return form[: len(form) - len(self.match_suffix)] + self.replace_suffix


@dataclass(frozen=True)
class PronounCaseTable:
    subject_to_object: tuple[tuple[str, str], ...]

    def __post_init__(self):
        subjects = [lookup_key(s) for s, _ in self.subject_to_object]
        objects = [lookup_key(o) for _, o in self.subject_to_object]
        if len(set(subjects)) != len(subjects) or len(set(objects)) != len(objects):
            raise RuleFileError("pronoun case table is not bijective")
        if set(subjects) & set(objects):
            raise RuleFileError("pronoun case table: subject and object forms overlap")
        object.__setattr__(self, "_to_object", dict(zip(subjects, objects)))
        object.__setattr__(self, "_to_subject", dict(zip(objects, subjects)))

    def is_subject(self, form: str) -> bool:
        return lookup_key(form) in self._to_object

    def is_object(self, form: str) -> bool:
        return lookup_key(form) in self._to_subject

    def to_object(self, form: str) -> str:
        return match_case(self._to_object[lookup_key(form)], form)

    def to_subject(self, form: str) -> str:
        return match_case(self._to_subject[lookup_key(form)], form)


@dataclass(frozen=True)
class VerbFormTable:
    """Paired inflections of *ligge* (left) and *lægge* (right)."""

    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        table = SwapTable(self.pairs)
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "_ligge", frozenset(lookup_key(a) for a, _ in self.pairs))

    def __contains__(self, form: str) -> bool:
        return form in self._table

    def family(self, form: str) -> str:
        return "ligge" if lookup_key(form) in self._ligge else "lægge"

    def swap(self, form: str) -> str | None:
        return self._table.swap(form)


@dataclass(frozen=True)
class MisspellingLexicon:
    entries: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        normalized = {}
        for correct, variants in self.entries:
            key = correct.lower()
            for v in variants:
                if v.lower() == key:
                    raise RuleFileError(f"lexicon entry {correct!r} lists itself as a misspelling")
            merged = normalized.setdefault(key, [])
            merged.extend(v for v in variants if v not in merged)
        object.__setattr__(self, "entries", tuple((k, tuple(v)) for k, v in sorted(normalized.items())))
        object.__setattr__(self, "_map", dict(self.entries))

    def __contains__(self, form: str) -> bool:
        return form.lower() in self._map

    def __len__(self) -> int:
        return len(self.entries)

    def variants(self, form: str) -> tuple[str, ...]:
        return self._map.get(form.lower(), ())

    def merged(self, entries: Iterable[tuple[str, str]]) -> MisspellingLexicon:
        extra = [(c, (m,)) for c, m in entries]
        return MisspellingLexicon(self.entries + tuple(extra))


SUFFIX_SECTIONS = ("suffix_determiner", "ende_ene", "r_problem_verb", "r_problem_noun", "r_problem_adjective", "r_problem_adjective_reverse")
SWAP_SECTIONS = ("indefinite_article", "nogle_nogen", "faar_for", "pronoun_case", "verb_forms")


def _rule(match, repl, upos, **feats) -> SuffixRule:
    return SuffixRule(match, repl, frozenset(upos.split(",")), tuple(feats.items()))


DEFAULT_SUFFIX_RULES = {
    "suffix_determiner": (
        _rule("en", "et", "NOUN", Definite="Def", Number="Sing"),
        _rule("et", "en", "NOUN", Definite="Def", Number="Sing"),
    ),
    "ende_ene": (
        _rule("ene", "ende", "NOUN"),
        _rule("ende", "ene", "VERB,ADJ"),
    ),
    "r_problem_verb": (
        _rule("rer", "re", "VERB", Tense="Pres"),
        _rule("re", "rer", "VERB", VerbForm="Inf"),
    ),
    "r_problem_noun": (
        _rule("erne", "ene", "NOUN", Number="Plur", Definite="Def"),
        _rule("ere", "er", "NOUN", Number="Plur", Definite="Ind"),
        _rule("eren", "erne", "NOUN", Number="Sing", Definite="Def"),
    ),
    "r_problem_adjective": (_rule("ere", "er", "ADJ", Degree="Cmp"),),
    # only consulted when RulePack.adjective_reverse is set
    "r_problem_adjective_reverse": (_rule("er", "ere", "ADJ", Degree="Pos"),),
}

DEFAULT_PRONOUNS = (
    ("jeg", "mig"),
    ("du", "dig"),
    ("han", "ham"),
    ("hun", "hende"),
    ("vi", "os"),
    ("I", "jer"),
    ("de", "dem"),
)

DEFAULT_VERB_FORMS = (
    ("ligge", "lægge"),
    ("ligger", "lægger"),
    ("lå", "lagde"),
    ("ligget", "lagt"),
    ("liggende", "læggende"),
)


@dataclass(frozen=True)
class RulePack:
    indefinite_article: SwapTable = SwapTable.of(("en", "et"))
    nogle_nogen: SwapTable = SwapTable.of(("nogle", "nogen"))
    faar_for: SwapTable = SwapTable.of(("får", "for"))
    pronoun_case: PronounCaseTable = PronounCaseTable(DEFAULT_PRONOUNS)
    verb_forms: VerbFormTable = VerbFormTable(DEFAULT_VERB_FORMS)
    suffix_rules: Mapping[str, tuple[SuffixRule, ...]] = field(default_factory=lambda: dict(DEFAULT_SUFFIX_RULES))
    lexicon: MisspellingLexicon = MisspellingLexicon()
    negation_adverbs: frozenset[str] = frozenset({"ikke", "aldrig"})
    # checker categories accepted as a hit for each corruption kind
    categories: Mapping[str, frozenset[str]] = field(default_factory=dict)
    js_threshold: float = 0.01
    adjective_reverse: bool = False

    def suffix(self, name: str) -> tuple[SuffixRule, ...]:
        return self.suffix_rules.get(name, ())

    def to_json(self) -> dict:
        return {
            "indefinite_article": [list(p) for p in self.indefinite_article.pairs],
            "nogle_nogen": [list(p) for p in self.nogle_nogen.pairs],
            "faar_for": [list(p) for p in self.faar_for.pairs],
            "pronoun_case": [list(p) for p in self.pronoun_case.subject_to_object],
            "verb_forms": [list(p) for p in self.verb_forms.pairs],
            "suffix_rules": {
                name: [
                    [r.match_suffix, r.replace_suffix, sorted(r.required_upos), [list(f) for f in r.required_feats]]
                    for r in rules
                ]
                for name, rules in sorted(self.suffix_rules.items())
            },
            "lexicon": [[k, list(v)] for k, v in self.lexicon.entries],
            "negation_adverbs": sorted(self.negation_adverbs),
            "categories": {k: sorted(v) for k, v in sorted(self.categories.items())},
            "js_threshold": self.js_threshold,
            "adjective_reverse": self.adjective_reverse,
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_json(), sort_keys=True, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def parse_sections(text: str, source: str = "<rules>") -> list[tuple[str, list[tuple[int, list[str]]]]]:
    """Split key-sectioned text into ``(header, [(line_no, columns), ...])`` blocks."""
    sections: list[tuple[str, list[tuple[int, list[str]]]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            sections.append((line[1:-1].strip(), []))
            continue
        if not sections:
            raise RuleFileError(f"{source}:{line_no}: entry outside of any section: {line!r}")
        sections[-1][1].append((line_no, [c.strip() for c in line.split("\t")]))
    return sections


def _parse_feats(spec: str) -> tuple[tuple[str, str], ...]:
    if not spec or spec == "_":
        return ()
    out = []
    for item in spec.split("|"):
        k, sep, v = item.partition("=")
        if not sep:
            raise RuleFileError(f"malformed feature constraint {item!r}")
        out.append((k, v))
    return tuple(out)


def _pairs(entries, source, section) -> list[tuple[str, str]]:
    out = []
    for line_no, cols in entries:
        if len(cols) != 2 or not all(cols):
            raise RuleFileError(f"{source}:{line_no}: [{section}] expects 'lhs<TAB>rhs', got {cols!r}")
        out.append((cols[0], cols[1]))
    return out


def _merge_suffix(existing: tuple[SuffixRule, ...], entries, source, section) -> tuple[SuffixRule, ...]:
    rules = list(existing)
    for line_no, cols in entries:
        if len(cols) < 2 or len(cols) > 4:
            raise RuleFileError(f"{source}:{line_no}: [{section}] expects 2-4 columns, got {cols!r}")
        match, repl = cols[0], cols[1]
        previous = next((r for r in rules if r.match_suffix == match), None)
        try:
            if len(cols) > 2:
                upos = frozenset(u for u in cols[2].split(",") if u and u != "_")
                feats = _parse_feats(cols[3]) if len(cols) > 3 else ()
            elif previous is not None:
                upos, feats = previous.required_upos, previous.required_feats
            else:
                upos, feats = frozenset(), ()
            rule = SuffixRule(match, repl, upos, feats)
        except RuleFileError as exc:
            raise RuleFileError(f"{source}:{line_no}: {exc}") from None
        if previous is not None:
            rules[rules.index(previous)] = rule
        else:
            rules.append(rule)
    return tuple(rules)


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def apply_rule_text(pack: RulePack, text: str, source: str = "<rules>") -> RulePack:
    """Merge rule-file text into ``pack``; file entries override or extend it."""
    from dalaforge.corruptors import CorruptionKind

    kinds = {k.value for k in CorruptionKind}
    changes: dict = {}
    suffix_rules = dict(pack.suffix_rules)
    categories = {k: set(v) for k, v in pack.categories.items()}
    for header, entries in parse_sections(text, source):
        kind, _, name = header.partition(":")
        try:
            if kind == "swap" and name in SWAP_SECTIONS:
                pairs = _pairs(entries, source, header)
                if name == "pronoun_case":
                    current = changes.get(name, pack.pronoun_case)
                    touched = {lookup_key(x) for p in pairs for x in p}
                    kept = [p for p in current.subject_to_object if not touched & {lookup_key(p[0]), lookup_key(p[1])}]
                    changes[name] = PronounCaseTable(tuple(kept + pairs))
                elif name == "verb_forms":
                    current = changes.get(name, pack.verb_forms)
                    merged = SwapTable(current.pairs).merged(pairs)
                    changes[name] = VerbFormTable(merged.pairs)
                else:
                    changes[name] = changes.get(name, getattr(pack, name)).merged(pairs)
            elif kind == "suffix" and name in SUFFIX_SECTIONS:
                suffix_rules[name] = _merge_suffix(suffix_rules.get(name, ()), entries, source, header)
            elif header == "lexicon":
                lexicon = changes.get("lexicon", pack.lexicon)
                changes["lexicon"] = lexicon.merged(_pairs(entries, source, header))
            elif kind == "categories" and name in kinds:
                categories.setdefault(name, set()).update(c for _, cols in entries for c in cols if c)
            elif header == "negation":
                changes["negation_adverbs"] = frozenset(
                    changes.get("negation_adverbs", pack.negation_adverbs)
                ) | {c.lower() for _, cols in entries for c in cols if c}
            elif header == "constants":
                for line_no, cols in entries:
                    if len(cols) != 2:
                        raise RuleFileError(f"{source}:{line_no}: [constants] expects 'name<TAB>value'")
                    key, value = cols
                    if key == "js_threshold":
                        changes["js_threshold"] = float(value)
                    elif key == "adjective_reverse" and value.lower() in _BOOL:
                        changes["adjective_reverse"] = _BOOL[value.lower()]
                    else:
                        raise RuleFileError(f"{source}:{line_no}: unknown constant or bad value {key!r}={value!r}")
            else:
                raise RuleFileError(f"{source}: unknown section [{header}]")
        except RuleFileError as exc:
            if str(exc).startswith(source):
                raise
            raise RuleFileError(f"{source}: [{header}] {exc}") from None
    return replace(
        pack,
        suffix_rules=suffix_rules,
        categories={k: frozenset(v) for k, v in categories.items()},
        **changes,
    )


def sample_lexicon_text() -> str:
    return resources.files("dalaforge").joinpath("data/sample_lexicon.rules").read_text(encoding="utf-8")


def default_rule_pack() -> RulePack:
    """Built-in tables plus the small illustrative misspelling sample."""
    return apply_rule_text(RulePack(), sample_lexicon_text(), "sample_lexicon.rules")


def load_rule_pack(path: str | Path | None = None) -> RulePack:
    pack = default_rule_pack()
    if path is None:
        return pack
    path = Path(path)
    return apply_rule_text(pack, path.read_text(encoding="utf-8"), str(path))
