import pytest
from hypothesis import given, settings, strategies as st

from stackgram.labels import LabelError, LabelRegistry


def build(ops):
    """Grow a registry from a list of (kind, index) choices."""
    reg = LabelRegistry()
    reg.new_root()
    for kind, k in ops:
        labels = list(reg.parents)
        s = labels[k % len(labels)]
        if kind == "child":
            reg.new_child(s)
        elif kind == "root":
            reg.new_root()
        elif reg.parent(s) is not None:
            reg.insert_between(reg.parent(s), s)
    return reg


ops = st.lists(st.tuples(st.sampled_from(["child", "child", "root", "between"]), st.integers(0, 50)),
               max_size=25)


def test_insert_between_keeps_order():
    reg = LabelRegistry()
    a = reg.new_root()
    b = reg.new_child(a)
    c = reg.new_child(b)
    m = reg.insert_between(a, b)
    assert reg.precedes(a, m) and reg.precedes(m, b) and reg.precedes(m, c)
    assert reg.parent(b) == m


def test_insert_between_needs_direct_child():
    reg = LabelRegistry()
    a = reg.new_root()
    b = reg.new_child(reg.new_child(a))
    with pytest.raises(LabelError):
        reg.insert_between(a, b)
    with pytest.raises(LabelError):
        reg.insert_between(b, a)


def test_unknown_label_rejected():
    with pytest.raises(LabelError):
        LabelRegistry().parent(7)


@given(ops)
def test_strict_order(o):
    reg = build(o)
    labels = list(reg.parents)
    for a in labels:
        assert not reg.precedes(a, a)
        for b in labels:
            if reg.precedes(a, b):
                assert not reg.precedes(b, a)
                for c in labels:
                    if reg.precedes(b, c):
                        assert reg.precedes(a, c)


@given(ops, st.data())
@settings(max_examples=150)
def test_child_of_matches_definition(o, data):
    reg = build(o)
    labels = list(reg.parents)
    subset = set(data.draw(st.lists(st.sampled_from(labels), min_size=1)))
    s0 = data.draw(st.sampled_from(sorted(subset)))
    below = {t for t in subset if reg.precedes(s0, t)}
    expected = {t for t in below if not any(reg.precedes(m, t) for m in below if m != t)}
    assert reg.child_of(s0, subset) == expected


@given(ops)
def test_paths_round_trip(o):
    reg = build(o)
    for s in reg.parents:
        assert reg.by_path(reg.path(s)) == s


def test_ensure_path_allocates_in_order():
    reg = LabelRegistry()
    s = reg.ensure_path("0.2")
    assert reg.path(s) == "0.2"
    assert len(reg.children(reg.by_path("0"))) == 3


def test_descendants_pre_order():
    reg = LabelRegistry()
    r = reg.new_root()
    a, b = reg.new_child(r), reg.new_child(r)
    a1 = reg.new_child(a)
    assert reg.descendants(r) == [a, a1, b]
