import pytest
from hypothesis import given, strategies as st

from stackgram.labels import LabelRegistry
from stackgram.words import (GWord, LayeredWord, coproject, format_gword, make_word, parse_gword,
                             parse_word, plain, plain_str, project)

item = st.tuples(st.sampled_from(["a", "b", "f", "Pop", "q0^R"]),
                 st.lists(st.integers(0, 2), min_size=1, max_size=3))


@given(st.lists(item, max_size=6), st.lists(item, max_size=6))
def test_gword_text_round_trip(vis, inv):
    def text(items):
        return "".join(f"[{a}@{'.'.join(map(str, p))}]" for a, p in items)
    src = f"{text(vis)} $ {text(inv)}"
    reg = LabelRegistry()
    gw = parse_gword(reg, src)
    out = format_gword(reg, gw)
    assert parse_gword(reg, out).visible.letters.__len__() == len(vis)
    assert format_gword(reg, parse_gword(reg, out)) == out


def test_projection_splits_by_label():
    reg = LabelRegistry()
    w = parse_word(reg, "[a@0][b@0.0][c@0][d@0.1]")
    s = reg.by_path("0")
    assert plain(project(w, s)) == ("a", "c")
    assert plain(coproject(w, s)) == ("b", "d")


def test_one_bracket_is_one_letter():
    reg = LabelRegistry()
    assert plain(parse_word(reg, "[bb@0]")) == ("bb",)
    assert plain(parse_word(reg, "[b@0][b@0]")) == ("b", "b")


def test_uids_are_fresh():
    reg = LabelRegistry()
    gw = parse_gword(reg, "[a@0][a@0] $ [a@0.0]")
    uids = gw.visible.uids() + gw.invisible.uids()
    assert len(set(uids)) == 3


@pytest.mark.parametrize("bad", ["[a@0] [b@0]", "[a@0]", "[a@0] $ x"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        parse_gword(LabelRegistry(), bad)


def test_plain_helpers():
    reg = LabelRegistry()
    w = make_word(reg, "hf", reg.new_root())
    assert plain_str(plain(w)) == "hf"
    assert plain_str(("Pop", "a")) == "Pop a"
    assert len(LayeredWord()) == 0 and not GWord().visible
