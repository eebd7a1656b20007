from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from oracles import log2_f, log2_h, programs_isomorphic
from stackgram.lang import (Call, Con, Var, eval_ground, num, parse_program, parse_term, show, substitute,
                            to_int)
from stackgram.scp import (dot_text, is_variable_renaming, msg, renaming, supercompile, tree_text,
                           unfold)
from test_whistles import terms

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

EXPECTED = {
    "turchin": """
        f1(0)=0; f1(x+1)=f2(g1(x)+1);
        f2(0)=0; f2(x+1)=f1(x)+1;
        g1(0)=0; g1(1)=0; g1(x+1+1)=g1(x)+1;
    """,
    "hve": """
        f1(0)=0; f1(x+1)=f2(g1(x)+1);
        f2(0)=0; f2(x+1)=f2(g2(x+1))+1;
        g1(0)=0; g1(1)=0; g1(x+1+1)=g1(x)+1;
        g2(0)=0; g2(1)=0; g2(x+1+1)=g2(x)+1;
    """,
    # the last f1 rule keeps its trailing +1; without it the program computes a different function
    "composite": """
        f1(0)=0; f1(1)=1; f1(2)=1; f1(x+1+1+1)=f1(g1(x)+1)+1;
        g1(0)=0; g1(1)=0; g1(x+1+1)=g1(x)+1;
    """,
}


@pytest.fixture(scope="module")
def log2():
    return parse_program((SAMPLES / "log2.l").read_text())


@pytest.fixture(scope="module", params=sorted(EXPECTED))
def result(request, log2):
    rel = request.param
    graph, residual = supercompile(log2, parse_term("f(h(x))", log2), rel)
    return rel, graph, residual


def test_residual_isomorphic_to_reference(result):
    rel, _, residual = result
    assert programs_isomorphic(residual.program, parse_program(EXPECTED[rel], strict=False))


def test_residual_rule_counts(result):
    rel, _, residual = result
    assert len(residual.program.rules) == {"turchin": 7, "hve": 10, "composite": 7}[rel]


def test_residual_agrees_with_source(result, log2):
    _, _, residual = result
    for n in range(17):
        call = Call(residual.entry, (num(n),))
        assert to_int(eval_ground(residual.program, call)) == log2_f(log2_h(n))


def test_graph_is_closed(result):
    _, graph, _ = result
    assert not graph.exhausted
    ids = {n.id for n in graph.nodes()}
    for n in graph.nodes():
        assert n.kind not in ("open", "frontier")
        if n.kind == "fold":
            assert n.target in n.path()[:-1]
            assert n.target.id in ids


def test_first_fires(log2):
    expect = {
        "turchin": ("f(g(g(x1)+1))", "f(h(g(x1)))"),
        "hve": ("f(g(x1)+1)", "f(g(g(x1)+1))"),
        "composite": ("f(h(x))", "f(h(g(x3)+1))"),
    }
    for rel, pair in expect.items():
        g = unfold(log2, parse_term("f(h(x))", log2), rel)
        assert (show(g.first_fire.earlier), show(g.first_fire.later)) == pair


def test_budget_leaves_frontier(log2):
    g = unfold(log2, parse_term("f(h(x))", log2), "turchin", max_nodes=4)
    assert g.exhausted


def test_presentations(log2, result):
    _, graph, _ = result
    tree = tree_text(log2, graph)
    assert tree.startswith("#0 f(h(x))  [hf]")
    dot = dot_text(log2, graph)
    assert dot.startswith("digraph") and dot.rstrip().endswith("}")
    assert dot.count("->") >= len(graph.nodes()) - 1


def test_msg_example():
    x = Var("x")
    a = Call("f", (Call("h", (x,)),))
    b = Call("f", (Call("h", (Con("S", (Call("g", (Var("x3"),)),)),)),))
    g, s1, s2 = msg(a, b)
    assert show(g) == "f(h(x4))"
    assert s1 == {"x4": x} and show(s2["x4"]) == "g(x3)+1"


@given(terms(3), terms(3))
@settings(max_examples=300)
def test_msg_is_a_common_generalization(a, b):
    g, s1, s2 = msg(a, b)
    assert show(substitute(g, s1)) == show(a)
    assert show(substitute(g, s2)) == show(b)


@given(terms(3))
def test_msg_with_itself_is_identity(a):
    g, s1, s2 = msg(a, a)
    assert show(g) == show(a) and s1 == {} and s2 == {}


def test_renaming():
    a = Call("m", (Var("x"), Var("x1")))
    assert renaming(a, Call("m", (Var("x2"), Var("x")))) == {"x": "x2", "x1": "x"}
    assert renaming(a, Call("m", (Var("x"), Var("x")))) is None
    assert is_variable_renaming({"x": Var("x1")})
    assert not is_variable_renaming({"x": Var("x1"), "x2": Var("x1")})
