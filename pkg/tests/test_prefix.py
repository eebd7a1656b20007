import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from oracles import plain_turchin_oracle
from stackgram.prefix import (PrefixGrammar, PrefixGrammarError, PrefixRule, is_alphabetic_pg,
                              parse_prefix_grammar, run_all, run_ordered, turchin_pair_plain)
from stackgram.words import plain_str

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


@pytest.fixture
def log2():
    return parse_prefix_grammar((SAMPLES / "log2_cbv.pg").read_text())


def test_ordered_trace(log2):
    t = run_ordered(log2, 3)
    assert [plain_str(t.plain(k)) for k in range(3)] == ["hf", "gf", "hf"]


def test_all_policy_branches(log2):
    traces = run_all(log2, 2)
    ends = sorted(plain_str(t.plain(len(t.words) - 1)) for t in traces)
    assert "" in ends and "hf" in ends and "f" in ends


def test_first_pair_on_cycle(log2):
    t = run_ordered(log2, 5)
    v = turchin_pair_plain(t, 0, 2)
    assert v is not None and v.top == ("h",) and v.context == ("f",)
    assert turchin_pair_plain(t, 0, 1) is None


def test_parse_errors():
    with pytest.raises(PrefixGrammarError):
        parse_prefix_grammar("f -> g")
    with pytest.raises(PrefixGrammarError):
        parse_prefix_grammar("init: f\n -> g")
    with pytest.raises(PrefixGrammarError):
        PrefixRule((), ("a",))


def random_grammar(rng: random.Random) -> PrefixGrammar:
    letters = "abc"[:rng.randint(1, 3)]
    rules = []
    for _ in range(rng.randint(1, 6)):
        lhs = tuple(rng.choice(letters) for _ in range(rng.randint(1, 2)))
        rhs = tuple(rng.choice(letters) for _ in range(rng.randint(0, 3)))
        rules.append(PrefixRule(lhs, rhs))
    rng.shuffle(rules)
    init = tuple(rng.choice(letters) for _ in range(rng.randint(1, 4)))
    return PrefixGrammar(tuple(rules), init)


@given(st.integers(0, 10**9))
@settings(max_examples=120, deadline=None)
def test_plain_detector_matches_oracle(seed):
    rng = random.Random(seed)
    t = run_ordered(random_grammar(rng), rng.randint(2, 40))
    for j in range(len(t.words)):
        for i in range(j):
            assert (turchin_pair_plain(t, i, j) is not None) == plain_turchin_oracle(t, i, j)


def test_alphabetic_flag(log2):
    assert is_alphabetic_pg(log2)
    assert not is_alphabetic_pg(PrefixGrammar((PrefixRule(("a", "b"), ()),), ("a",)))
