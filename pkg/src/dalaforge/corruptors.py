"""Rule-based corruption functions.

Every corruptor maps a sentence to at most one :class:`CorruptionOutcome`.
It first collects candidate sites (a pure, rng-free step that also serves as
its applicability predicate) and then picks one site uniformly with the
supplied random generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Union

import numpy as np

from dalaforge.conllu import (
    AnnotatedSentence,
    AnnotatedToken,
    render_forms,
    render_text,
)
from dalaforge.rules import RulePack, SuffixRule, match_case


class CorruptionKind(str, Enum):
    INDEFINITE_DETERMINER = "indefinite_determiner"
    SUFFIX_DETERMINER = "suffix_determiner"
    NOGLE_NOGEN = "nogle_nogen"
    ENDE_ENE = "ende_ene"
    PRONOUN_CASE = "pronoun_case"
    SOM_DER = "som_der"
    PERSONAL_PRONOUN = "personal_pronoun"
    SPELLING_ERROR = "spelling_error"
    LIGGE_LAEGGE = "ligge_laegge"
    R_PROBLEM_VERB = "r_problem_verb"
    R_PROBLEM_NOUN = "r_problem_noun"
    R_PROBLEM_ADJECTIVE = "r_problem_adjective"
    GENITIVE = "genitive"
    FAAR_FOR = "faar_for"
    BASIC_FLIP = "basic_flip"
    BASIC_DELETE = "basic_delete"

    def __str__(self) -> str:
        return self.value

    @property
    def label(self) -> str:
        return KIND_LABELS[self]

    @property
    def position(self) -> int:
        """Index in the canonical kind ordering (declaration order)."""
        return KIND_ORDER.index(self)


KIND_ORDER: tuple[CorruptionKind, ...] = tuple(CorruptionKind)

KIND_LABELS = {
    CorruptionKind.INDEFINITE_DETERMINER: "Indefinite determiner",
    CorruptionKind.SUFFIX_DETERMINER: "Suffix determiner",
    CorruptionKind.NOGLE_NOGEN: "Nogle vs nogen",
    CorruptionKind.ENDE_ENE: "Ende vs ene",
    CorruptionKind.PRONOUN_CASE: "Pronouns obj vs subj",
    CorruptionKind.SOM_DER: "Som vs der",
    CorruptionKind.PERSONAL_PRONOUN: "Han/hun vs det",
    CorruptionKind.SPELLING_ERROR: "Spelling errors",
    CorruptionKind.LIGGE_LAEGGE: "Ligge vs lægge",
    CorruptionKind.R_PROBLEM_VERB: "R problem (verbs)",
    CorruptionKind.R_PROBLEM_NOUN: "R problem (nouns)",
    CorruptionKind.R_PROBLEM_ADJECTIVE: "R problem (adjectives)",
    CorruptionKind.GENITIVE: "Genitive",
    CorruptionKind.FAAR_FOR: "Får vs for",
    CorruptionKind.BASIC_FLIP: "Basic 1 (flip neighbors)",
    CorruptionKind.BASIC_DELETE: "Basic 2 (delete)",
}

Locus = Union[int, tuple[int, int]]

NOMINAL = frozenset({"NOUN", "PROPN"})
FLIP_BLOCKED = frozenset({"ADJ", "PUNCT", "PROPN"})
DELETABLE = frozenset({"VERB", "AUX", "ADP", "DET"})


@dataclass(frozen=True)
class Site:
    """One place a corruption could be applied.

    ``replacements`` holds the alternative new forms for a substitution
    (several only for spelling variants); it is empty for swaps and deletions.
    """

    locus: Locus
    op: str = "substitute"
    replacements: tuple[str, ...] = ()


@dataclass(frozen=True)
class CorruptionOutcome:
    sentence_id: str
    kind: CorruptionKind
    corrupted_text: str
    original_text: str
    locus: Locus
    original_form: str
    corrupted_form: str

    @property
    def op(self) -> str:
        if self.kind is CorruptionKind.BASIC_FLIP:
            return "swap"
        if self.kind is CorruptionKind.BASIC_DELETE:
            return "delete"
        return "substitute"

    def to_json(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "kind": self.kind.value,
            "original_text": self.original_text,
            "corrupted_text": self.corrupted_text,
            "locus": list(self.locus) if isinstance(self.locus, tuple) else self.locus,
            "original_form": self.original_form,
            "corrupted_form": self.corrupted_form,
        }

    @classmethod
    def from_json(cls, data: dict) -> CorruptionOutcome:
        locus = data["locus"]
        return cls(
            sentence_id=data["sentence_id"],
            kind=CorruptionKind(data["kind"]),
            corrupted_text=data["corrupted_text"],
            original_text=data["original_text"],
            locus=tuple(locus) if isinstance(locus, list) else int(locus),
            original_form=data["original_form"],
            corrupted_form=data["corrupted_form"],
        )


def edit_tokens(sentence: AnnotatedSentence, site: Site, replacement: str | None = None) -> tuple[list[str], list[bool]]:
    forms = [t.form for t in sentence.tokens]
    spaces = [t.space_after for t in sentence.tokens]
    if site.op == "substitute":
        forms[site.locus - 1] = replacement
    elif site.op == "swap":
        i, j = site.locus
        forms[i - 1], forms[j - 1] = forms[j - 1], forms[i - 1]
    elif site.op == "delete":
        del forms[site.locus - 1]
        del spaces[site.locus - 1]
    else:
        raise ValueError(f"unknown edit operation {site.op!r}")
    return forms, spaces


def _site_forms(sentence: AnnotatedSentence, site: Site, replacement: str | None) -> tuple[str, str]:
    if site.op == "substitute":
        return sentence[site.locus].form, replacement
    if site.op == "swap":
        a, b = (sentence[i].form for i in site.locus)
        return f"{a} {b}", f"{b} {a}"
    return sentence[site.locus].form, ""


class Corruptor:
    """A named corruption: a candidate-site finder plus uniform site choice."""

    def __init__(self, kind: CorruptionKind, find_sites: Callable[[AnnotatedSentence, RulePack], list[Site]]):
        self.kind = kind
        self.find_sites = find_sites
        self.__name__ = f"corrupt_{kind.value}"
        self.__doc__ = find_sites.__doc__

    def __repr__(self) -> str:
        return f"<Corruptor {self.kind.value}>"

    def candidates(self, sentence: AnnotatedSentence, pack: RulePack) -> list[Site]:
        original = render_text(sentence)
        sites = []
        for site in self.find_sites(sentence, pack):
            options = site.replacements or (None,)
            # a site only counts if every alternative really changes the text
            if all(render_forms(*edit_tokens(sentence, site, r)) != original for r in options):
                sites.append(site)
        return sites

    def applicable(self, sentence: AnnotatedSentence, pack: RulePack) -> bool:
        return bool(self.candidates(sentence, pack))

    def apply(self, sentence: AnnotatedSentence, site: Site, replacement: str | None = None) -> CorruptionOutcome:
        original_form, corrupted_form = _site_forms(sentence, site, replacement)
        return CorruptionOutcome(
            sentence_id=sentence.id,
            kind=self.kind,
            corrupted_text=render_forms(*edit_tokens(sentence, site, replacement)),
            original_text=render_text(sentence),
            locus=site.locus,
            original_form=original_form,
            corrupted_form=corrupted_form,
        )

    def choose(self, sentence: AnnotatedSentence, sites: list[Site], rng) -> CorruptionOutcome:
        rng = np.random.default_rng(rng)
        site = sites[int(rng.integers(len(sites)))]
        replacement = None
        if site.replacements:
            replacement = site.replacements[int(rng.integers(len(site.replacements)))]
        return self.apply(sentence, site, replacement)

    def __call__(self, sentence: AnnotatedSentence, pack: RulePack, rng) -> CorruptionOutcome | None:
        sites = self.candidates(sentence, pack)
        return self.choose(sentence, sites, rng) if sites else None


def _editable(token: AnnotatedToken) -> bool:
    return token.upos != "PROPN"


def _sub(token: AnnotatedToken, *forms: str) -> Site:
    return Site(token.index, "substitute", tuple(forms))


def _suffix_sites(sentence: AnnotatedSentence, rules: tuple[SuffixRule, ...]) -> list[Site]:
    sites = []
    for t in sentence.tokens:
        if not _editable(t):
            continue
        rule = next((r for r in rules if r.matches(t.form, t.upos, t.feats)), None)
        if rule is not None:
            sites.append(_sub(t, rule.apply(t.form)))
    return sites


def _indefinite_determiner(sentence, pack):
    """Swap the article en/et attached (``det``) to a noun."""
    sites = []
    for t in sentence.tokens:
        if t.upos != "DET" or t.relation != "det" or not t.head:
            continue
        if sentence[t.head].upos != "NOUN":
            continue
        new = pack.indefinite_article.swap(t.form)
        if new is not None:
            sites.append(_sub(t, new))
    return sites


def _suffix_determiner(sentence, pack):
    """Swap the definite suffix -en/-et of a singular definite noun."""
    return _suffix_sites(sentence, pack.suffix("suffix_determiner"))


def _nogle_nogen(sentence, pack):
    """Swap nogle/nogen directly before an agreeing noun, outside questions and negations."""
    if any("?" in t.form or t.form.lower() in pack.negation_adverbs for t in sentence.tokens):
        return []
    sites = []
    for t in sentence.tokens:
        if t.index == len(sentence) or not _editable(t) or t.form not in pack.nogle_nogen:
            continue
        noun = sentence[t.index + 1]
        if noun.upos != "NOUN" or t.head != noun.index:
            continue
        # only corrupt pronouns that currently agree with the noun
        wanted = {"nogle": "Plur", "nogen": "Sing"}.get(t.form.lower())
        if wanted is not None and noun.feat("Number") != wanted:
            continue
        sites.append(_sub(t, pack.nogle_nogen.swap(t.form)))
    return sites


def _ende_ene(sentence, pack):
    return _suffix_sites(sentence, pack.suffix("ende_ene"))


def _pronoun_case(sentence, pack):
    """Subject pronoun in nsubj/conj -> object form; object pronoun in obj/obl -> subject form."""
    table = pack.pronoun_case
    sites = []
    for t in sentence.tokens:
        if t.upos != "PRON":
            continue
        if t.relation in ("nsubj", "conj") and table.is_subject(t.form):
            sites.append(_sub(t, table.to_object(t.form)))
        elif t.relation in ("obj", "obl") and table.is_object(t.form):
            sites.append(_sub(t, table.to_subject(t.form)))
    return sites


def _is_relative_som(sentence, t) -> bool:
    if t.form.lower() != "som" or not t.head:
        return False
    if t.upos == "PRON":
        return True
    return t.relation == "mark" and sentence[t.head].deprel.startswith("acl")


def _som_der(sentence, pack):
    """Relative som in a clause with its own overt subject -> der."""
    sites = []
    for t in sentence.tokens:
        if not _is_relative_som(sentence, t) or t.relation == "nsubj":
            continue
        clause = sentence.dependents(t.head)
        if any(d.index != t.index and d.relation == "nsubj" for d in clause):
            sites.append(_sub(t, match_case("der", t.form)))
    return sites


def _personal_pronoun(sentence, pack):
    """Subject han/hun with an earlier potential referent -> det."""
    sites = []
    for t in sentence.tokens:
        if t.form.lower() not in ("han", "hun") or t.upos != "PRON" or t.relation != "nsubj":
            continue
        if any(u.upos in NOMINAL for u in sentence.tokens[: t.index - 1]):
            sites.append(_sub(t, match_case("det", t.form)))
    return sites


def _spelling_error(sentence, pack):
    sites = []
    for t in sentence.tokens:
        if _editable(t) and t.form in pack.lexicon:
            sites.append(_sub(t, *(match_case(v, t.form) for v in pack.lexicon.variants(t.form))))
    return sites


def _ligge_laegge(sentence, pack):
    """Swap ligge/lægge inflections where the transitivity context makes the swap wrong."""
    sites = []
    for t in sentence.tokens:
        if t.upos != "VERB" or t.form not in pack.verb_forms:
            continue
        has_obj = any(d.relation == "obj" for d in sentence.dependents(t.index))
        family = pack.verb_forms.family(t.form)
        if (family == "ligge") != has_obj:
            sites.append(_sub(t, pack.verb_forms.swap(t.form)))
    return sites


def _r_problem_verb(sentence, pack):
    return _suffix_sites(sentence, pack.suffix("r_problem_verb"))


def _r_problem_noun(sentence, pack):
    return _suffix_sites(sentence, pack.suffix("r_problem_noun"))


def _r_problem_adjective(sentence, pack):
    rules = pack.suffix("r_problem_adjective")
    if pack.adjective_reverse:
        rules = rules + pack.suffix("r_problem_adjective_reverse")
    return _suffix_sites(sentence, rules)


def genitive_variant(form: str) -> str | None:
    """Wrong genitive spelling for a correct one: ``Peters -> Peter's``, ``Jens' -> Jens's``."""
    lower = form.lower()
    if len(form) < 2 or lower.endswith("'s"):
        return None
    if lower.endswith("'"):
        return form + "s" if len(form) > 2 and lower[-2] in "sxz" else None
    if lower.endswith("s"):
        return form[:-1] + "'s"
    return None


def _genitive(sentence, pack):
    """Genitive nominal (Case=Gen, or suffix heuristic without features). Names are allowed here."""
    sites = []
    n = len(sentence)
    for t in sentence.tokens:
        if t.upos not in NOMINAL:
            continue
        if t.feat("Case") == "Gen":
            candidate = True
        elif not t.feats:
            candidate = t.index < n and sentence[t.index + 1].upos == "NOUN" and t.form.lower()[-1] in "s'"
        else:
            candidate = False
        new = genitive_variant(t.form) if candidate else None
        if new is not None:
            sites.append(_sub(t, new))
    return sites


def _faar_for(sentence, pack):
    sites = []
    for t in sentence.tokens:
        lower = t.form.lower()
        verb = lower == "får" and t.upos == "VERB" and t.lemma.lower() == "få"
        preposition = lower == "for" and t.upos in ("ADP", "SCONJ")
        if not (verb or preposition):
            continue
        new = pack.faar_for.swap(t.form)
        if new is not None:
            sites.append(_sub(t, new))
    return sites


def _basic_flip(sentence, pack):
    """Adjacent pairs past the first token, no ADJ/PUNCT/PROPN, differing forms."""
    sites = []
    # the sentence-initial token is left alone so capitalization stays intact
    for i in range(2, len(sentence)):
        a, b = sentence[i], sentence[i + 1]
        if a.upos in FLIP_BLOCKED or b.upos in FLIP_BLOCKED:
            continue
        if a.form.lower() == b.form.lower():
            continue
        sites.append(Site((i, i + 1), "swap"))
    return sites


def _basic_delete(sentence, pack):
    return [Site(t.index, "delete") for t in sentence.tokens[1:] if t.upos in DELETABLE]


corrupt_indefinite_determiner = Corruptor(CorruptionKind.INDEFINITE_DETERMINER, _indefinite_determiner)
corrupt_suffix_determiner = Corruptor(CorruptionKind.SUFFIX_DETERMINER, _suffix_determiner)
corrupt_nogle_nogen = Corruptor(CorruptionKind.NOGLE_NOGEN, _nogle_nogen)
corrupt_ende_ene = Corruptor(CorruptionKind.ENDE_ENE, _ende_ene)
corrupt_pronoun_case = Corruptor(CorruptionKind.PRONOUN_CASE, _pronoun_case)
corrupt_som_der = Corruptor(CorruptionKind.SOM_DER, _som_der)
corrupt_personal_pronoun = Corruptor(CorruptionKind.PERSONAL_PRONOUN, _personal_pronoun)
corrupt_spelling_error = Corruptor(CorruptionKind.SPELLING_ERROR, _spelling_error)
corrupt_ligge_laegge = Corruptor(CorruptionKind.LIGGE_LAEGGE, _ligge_laegge)
corrupt_r_problem_verb = Corruptor(CorruptionKind.R_PROBLEM_VERB, _r_problem_verb)
corrupt_r_problem_noun = Corruptor(CorruptionKind.R_PROBLEM_NOUN, _r_problem_noun)
corrupt_r_problem_adjective = Corruptor(CorruptionKind.R_PROBLEM_ADJECTIVE, _r_problem_adjective)
corrupt_genitive = Corruptor(CorruptionKind.GENITIVE, _genitive)
corrupt_faar_for = Corruptor(CorruptionKind.FAAR_FOR, _faar_for)
corrupt_basic_flip = Corruptor(CorruptionKind.BASIC_FLIP, _basic_flip)
corrupt_basic_delete = Corruptor(CorruptionKind.BASIC_DELETE, _basic_delete)

CORRUPTORS: dict[CorruptionKind, Corruptor] = {
    c.kind: c
    for c in (
        corrupt_indefinite_determiner,
        corrupt_suffix_determiner,
        corrupt_nogle_nogen,
        corrupt_ende_ene,
        corrupt_pronoun_case,
        corrupt_som_der,
        corrupt_personal_pronoun,
        corrupt_spelling_error,
        corrupt_ligge_laegge,
        corrupt_r_problem_verb,
        corrupt_r_problem_noun,
        corrupt_r_problem_adjective,
        corrupt_genitive,
        corrupt_faar_for,
        corrupt_basic_flip,
        corrupt_basic_delete,
    )
}
