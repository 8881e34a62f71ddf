import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dalaforge.conllu import (
    CleaningReport,
    ConlluError,
    CorpusCleaner,
    clean_corpus,
    has_ambiguous_punctuation,
    parse_conllu,
    render_text,
    serialize_conllu,
)
from tests.builders import random_corpus, sent

BLOCK = """# sent_id = b1
# text = Hun løber.
1\tHun\thun\tPRON\t_\tCase=Nom|Person=3\t2\tnsubj\t_\t_
2\tløber\tløbe\tVERB\t_\tTense=Pres\t0\troot\t_\tSpaceAfter=No
3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_
"""

MWT_BLOCK = """# sent_id = b2
1\tDet\tdet\tPRON\t_\t_\t2\tnsubj\t_\t_
2-3\tgikk\t_\t_\t_\t_\t_\t_\t_\t_
2\tgik\tgå\tVERB\t_\t_\t0\troot\t_\t_
3\tk\tk\tX\t_\t_\t2\tdep\t_\t_
"""


def test_parse_single_block():
    [s] = parse_conllu(BLOCK)
    assert s.id == "b1"
    assert [t.form for t in s.tokens] == ["Hun", "løber", "."]
    assert s[1].feats == {"Case": "Nom", "Person": "3"}
    assert s[2].space_after is False
    assert s[2].head == 0
    assert s.raw_text == "Hun løber."


def test_two_blocks_and_stream_input():
    corpus = parse_conllu(io.StringIO(BLOCK + "\n" + BLOCK.replace("b1", "b9")))
    assert [s.id for s in corpus] == ["b1", "b9"]


def test_multiword_range_drops_sentence():
    corpus = parse_conllu(BLOCK + "\n" + MWT_BLOCK + "\n")
    assert [s.id for s in corpus] == ["b1"]
    assert corpus.structural_rejects == 1


def test_empty_node_drops_sentence():
    block = BLOCK.replace("3\t.\t.", "2.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n3\t.\t.")
    corpus = parse_conllu(block)
    assert len(corpus) == 0 and corpus.structural_rejects == 1


def test_text_mismatch_is_a_structural_reject():
    corpus = parse_conllu(BLOCK.replace("# text = Hun løber.", "# text = Hun løber ."))
    assert len(corpus) == 0 and corpus.structural_rejects == 1


def test_wrong_column_count_names_line():
    bad = BLOCK.replace("2\tløber\tløbe\tVERB", "2\tløber\tVERB")
    with pytest.raises(ConlluError, match="line 4"):
        parse_conllu(bad)


@pytest.mark.parametrize("head", ["9", "2x", "3"])
def test_inconsistent_head_is_an_error(head):
    bad = BLOCK.replace("3\t.\t.\tPUNCT\t_\t_\t2", f"3\t.\t.\tPUNCT\t_\t_\t{head}")
    with pytest.raises(ConlluError, match="line 5"):
        parse_conllu(bad)


def test_block_without_sent_id_gets_one():
    [s] = parse_conllu(BLOCK.replace("# sent_id = b1\n", ""))
    assert s.id


@pytest.mark.parametrize(
    "forms, spaces, expected",
    [
        (["Hun", "løber", "."], [True, False, True], "Hun løber."),
        (["Ja"], [True], "Ja"),
        (["(", ")"], [False, True], "()"),
    ],
)
def test_render_text(forms, spaces, expected):
    rows = [(f, "X", 0, "root") for f in forms]
    s = sent(rows)
    s = type(s)(s.id, tuple(t.__class__(**{**t.__dict__, "space_after": sp}) for t, sp in zip(s.tokens, spaces)))
    assert render_text(s) == expected


def test_serialize_round_trip_on_synthetic_corpus():
    corpus = random_corpus(60, seed=3)
    again = parse_conllu(serialize_conllu(corpus))
    assert [s.tokens for s in again] == [s.tokens for s in corpus]
    assert [s.id for s in again] == [s.id for s in corpus]


_forms = st.text(alphabet="abcæøå.,()", min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_forms, st.booleans()), min_size=1, max_size=12))
def test_round_trip_property(items):
    rows = [(f, "X", 0 if i == 0 else 1, "dep") for i, (f, _) in enumerate(items)]
    s = sent(rows)
    tokens = tuple(t.__class__(**{**t.__dict__, "space_after": sp}) for t, (_, sp) in zip(s.tokens, items))
    s = type(s)("p1", tokens)
    [back] = parse_conllu(serialize_conllu([s]))
    assert back.tokens == s.tokens
    assert render_text(back) == render_text(s)


def _plain(forms, upos=None, id="c"):
    upos = upos or ["PRON", "VERB", "DET", "NOUN", "ADP", "NOUN", "PUNCT"][: len(forms)]
    return sent([(f, u, 0 if i == 0 else 1, "dep") for i, (f, u) in enumerate(zip(forms, upos))], id)


def test_clean_too_short():
    _, report = clean_corpus([_plain(["Hun", "så", "en", "bil"])])
    assert report.too_short == 1 and report.output_count == 0


def test_clean_too_simple():
    s = _plain(["bil", "hus", "bog", "stol", "tog", "."], ["NOUN"] * 5 + ["PUNCT"])
    _, report = clean_corpus([s])
    assert report.too_simple == 1


def test_clean_duplicates_keep_first():
    a = _plain(["Hun", "så", "en", "bil", "i", "byen", "."], id="a")
    b = _plain(["Hun", "så", "en", "bil", "i", "byen", "."], id="b")
    kept, report = clean_corpus([a, b])
    assert [s.id for s in kept] == ["a"]
    assert report.deduplicated == 1


def test_clean_char_bounds():
    long_word = "a" * 5000
    s = _plain(["Hun", "så", "en", long_word, "i", "byen", "."])
    _, report = clean_corpus([s])
    assert report.char_bounds == 1


@pytest.mark.parametrize(
    "forms, ambiguous",
    [
        (["Hun", "så", "(", "en", "bil", "."], True),
        (["Hun", "så", "(", "en", ")", "bil", "."], False),
        (["Hun", "så", '"', "en", "bil", "."], True),
        (["Hun", "så", ".", "En", "bil", "."], True),
        (['"', "Hun", "så", "en", "bil", "!", '"'], False),
        (["Hun", "så", "en", "bil", "!", '"'], True),
        (["Hvad", "så", "du", "?", "!"], False),
    ],
)
def test_ambiguous_punctuation(forms, ambiguous):
    upos = ["PUNCT" if f in '()".!?' else "NOUN" for f in forms]
    assert has_ambiguous_punctuation(_plain(forms, upos)) is ambiguous


def test_report_arithmetic_and_idempotence():
    corpus = random_corpus(300, seed=11)
    corpus = corpus + corpus[:20]
    kept, report = clean_corpus(corpus)
    assert report.output_count == report.input_count - report.rejected
    assert report.deduplicated >= 20
    again, report2 = clean_corpus(kept)
    assert [s.id for s in again] == [s.id for s in kept]
    assert report2.rejected == 0


def test_structural_rejects_flow_into_report():
    corpus = parse_conllu(BLOCK + "\n" + MWT_BLOCK)
    _, report = clean_corpus(corpus)
    assert report.structural_rejects == 1
    assert report.input_count == 2
    assert report.output_count == report.input_count - report.rejected


def test_cleaner_estimator_interface():
    cleaner = CorpusCleaner(min_tokens=3)
    assert cleaner.get_params()["min_tokens"] == 3
    kept = cleaner.fit_transform(random_corpus(50, seed=2))
    assert isinstance(cleaner.report_, CleaningReport)
    assert cleaner.report_.output_count == len(kept)
