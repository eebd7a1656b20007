import random
from pathlib import Path

import pytest

from stackgram.constructions import (POP, CFG, ConstructionError, TMConfig, cfg_language,
                                     cfg_language_via_mlpg, cfg_to_mlpg, decode_tm, explang,
                                     format_language, parse_cfg, parse_tm, random_gnf, simulate_tm,
                                     state_letters_placed, tm_bisimulation, tm_to_mlpg)
from stackgram.mlpg import TraceSession, enumerate_language, is_alphabetic_mlpg, matches, try_step

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def load_tm(name):
    return parse_tm((SAMPLES / name).read_text())


def run_machine(tm, tape, steps):
    s = TraceSession.start(tm_to_mlpg(tm, tape))
    while len(s.events) < steps and not s.halted:
        ms = matches(s)
        assert len(ms) <= 1
        if not ms or not try_step(s, ms[0]):
            break
    return s


@pytest.mark.parametrize("name, tape, length", [
    ("unary_inc.tm", "1" * 14, 31),
    ("pattern.tm", "b" * 30 + "e", 32),
])
def test_tm_bisimulation(name, tape, length):
    tm = load_tm(name)
    got, want = tm_bisimulation(tm, list(tape), 60)
    assert got == want
    assert len(got) == length
    s = run_machine(tm, list(tape), 60)
    assert s.halted and s.grammar.rule(s.events[-1].rule).halting
    assert all(state_letters_placed(w) for w in s.words[:-1])


def test_tm_moving_left_past_the_start():
    tm = parse_tm("states: q0 q1 qf\ntape: a _\nstart: q0\nfinal: qf\n"
                  "delta: q0 a -> q0 a L\ndelta: q0 _ -> q1 a L\ndelta: q1 _ -> qf a R\n")
    got, want = tm_bisimulation(tm, ["a", "a"], 20)
    assert got == want and len(got) == 4
    assert got[-1].state == "qf" and got[-1].left == ("a",)


def test_tm_simulator_normalizes_blanks():
    tm = load_tm("unary_inc.tm")
    cfgs = simulate_tm(tm, ["1"], 10)
    assert cfgs[0] == TMConfig("q0", (), "1", ())
    assert cfgs[-1].state == "qf"
    assert cfgs[-1] == TMConfig("qf", (), "1", ("1",))


def test_tm_parse_errors():
    with pytest.raises(ConstructionError):
        parse_tm("states: q0\ntape: a\nstart: q0\nq0 a -> q0 a R\nq0 a -> q0 a L\n")
    with pytest.raises(ConstructionError):
        parse_tm("tape: a\nstart: q0\n")
    with pytest.raises(ConstructionError):
        parse_tm("states: q0\ntape: a\nstart: q0\nq0 a -> q9 a R\n")


def test_decode_initial_configuration():
    tm = load_tm("unary_inc.tm")
    s = TraceSession.start(tm_to_mlpg(tm, list("111")))
    c = decode_tm(s.reg, s.words[0], tm)
    assert c == simulate_tm(tm, list("111"), 0)[0]


def test_anbn_language():
    cfg = parse_cfg((SAMPLES / "anbn.cfg").read_text())
    res = cfg_language_via_mlpg(cfg, 10)
    assert not res.exhausted
    assert format_language(res.words) == "ab aabb aaabbb aaaabbbb aaaaabbbbb"
    assert res.words == cfg_language(cfg, 10)


@pytest.mark.parametrize("seed", range(12))
def test_random_gnf_languages_short(seed):
    cfg = random_gnf(random.Random(seed))
    res = cfg_language_via_mlpg(cfg, 7)
    assert not res.exhausted
    assert {w for w in res.words if w} == {w for w in cfg_language(cfg, 7) if w}


def test_cfg_encoding_is_alphabetic_with_reserved_pop():
    cfg = parse_cfg((SAMPLES / "anbn.cfg").read_text())
    g = cfg_to_mlpg(cfg)
    assert POP in g.alphabet
    assert not is_alphabetic_mlpg(g) or all(len(r.head) == 1 for r in g.rules)


def test_cfg_must_be_greibach():
    with pytest.raises(ConstructionError):
        parse_cfg("S -> S a\nS -> a\n")
    with pytest.raises(ConstructionError):
        parse_cfg("S -> a b\n")
    with pytest.raises(ConstructionError):
        parse_cfg("")


def test_pop_is_reserved():
    with pytest.raises(ConstructionError):
        cfg_to_mlpg(CFG("S", (("S", ("a", POP)), (POP, ("a",))), frozenset("a")))


def test_explang_words_are_powers_of_two():
    res = enumerate_language(explang(), 16)
    assert {len(w) for w in res.words} == {2, 4, 8, 16}
    assert format_language(res.words) == "bb bbbb bbbbbbbb b^16"


def test_format_language():
    assert format_language({(), ("a", "b")}) == "Λ ab"
