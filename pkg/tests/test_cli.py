from pathlib import Path

import pytest

from oracles import programs_isomorphic
from stackgram.cli import main
from stackgram.lang import parse_program
from test_scp import EXPECTED

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_pg_run(capsys):
    assert run(capsys, "pg-run", SAMPLES / "log2_cbv.pg", "--steps", 3) == (0, "hf -> gf -> hf\n", "")


def test_pg_run_all(capsys):
    code, out, _ = run(capsys, "pg-run", SAMPLES / "log2_cbv.pg", "--steps", 2, "--policy", "all")
    assert code == 0 and "hf -> gf -> hf" in out.splitlines()


def test_mlpg_lang(capsys):
    code, out, _ = run(capsys, "mlpg-lang", SAMPLES / "explang.mlpg", "--max-len", 16)
    assert (code, out) == (0, "bb bbbb bbbbbbbb b^16\n")


def test_mlpg_lang_budget(capsys):
    code, out, err = run(capsys, "mlpg-lang", "explang", "--max-len", 16, "--max-states", 5)
    assert code == 2 and "budget" in err


@pytest.mark.parametrize("rel", sorted(EXPECTED))
def test_scp_residual(capsys, rel):
    code, out, _ = run(capsys, "scp", SAMPLES / "log2.l", "--entry", "f(h(x))", "--whistle", rel,
                       "--emit", "residual")
    assert code == 0
    assert programs_isomorphic(parse_program(out, strict=False), parse_program(EXPECTED[rel], strict=False))


def test_scp_dot_to_file(capsys, tmp_path):
    target = tmp_path / "graph.dot"
    code, out, _ = run(capsys, "scp", SAMPLES / "log2.l", "--entry", "f(h(x))", "--emit", "dot",
                       "--out", target)
    assert code == 0 and out == ""
    assert target.read_text().startswith("digraph process {")


def test_scp_budget(capsys):
    code, _, err = run(capsys, "scp", SAMPLES / "log2.l", "--entry", "f(h(x))", "--max-nodes", 3)
    assert code == 2


def test_whistle_lines(capsys):
    code, out, _ = run(capsys, "whistle", SAMPLES / "log2.l", "--entry", "f(h(x))", "--relation", "turchin")
    assert code == 0
    assert out.splitlines()[-1].startswith("TURCHIN i=2 j=3 top=g mid=h ctx=f")
    code, out, _ = run(capsys, "whistle", SAMPLES / "log2_cbv.pg", "--steps", 4)
    assert (code, out) == (0, "TURCHIN i=0 j=2 top=h mid= ctx=f\n")


def test_whistle_needs_entry(capsys):
    code, _, err = run(capsys, "whistle", SAMPLES / "log2.l")
    assert code == 1 and "--entry" in err


def test_domain_errors(capsys, tmp_path):
    bad = tmp_path / "bad.pg"
    bad.write_text("f -> g\n")
    assert run(capsys, "pg-run", bad)[0] == 1
    assert run(capsys, "scp", tmp_path / "missing.l", "--entry", "f(x)")[0] == 1
    assert run(capsys, "scp", SAMPLES / "log2.l", "--entry", "f(x")[0] == 1


def test_construct(capsys):
    code, out, err = run(capsys, "construct", "tm", SAMPLES / "unary_inc.tm", "--input", "111", "--steps", 20)
    assert code == 0 and out.startswith("alphabet:") and "agree" in err
    code, out, err = run(capsys, "construct", "cfg", SAMPLES / "anbn.cfg", "--max-len", 6)
    assert code == 0 and "ab aabb aaabbb" in err
    code, out, _ = run(capsys, "construct", "explang")
    assert code == 0 and "rule R3" in out


def test_mlpg_run(capsys):
    code, out, _ = run(capsys, "mlpg-run", SAMPLES / "explang.mlpg", "--steps", 2)
    assert code == 0
    assert out.splitlines()[0].split() == ["0", "init", "[a@0]", "$", "[b@0.0][b@0.0]"]


def test_desk_check(capsys):
    code, out, _ = run(capsys, "--seed", 4, "desk-check", "--count", 5, "--steps", 60)
    assert code == 0 and out.startswith("sampled=5")


def test_output_is_deterministic(capsys):
    args = ("scp", SAMPLES / "log2.l", "--entry", "f(h(x))", "--whistle", "hve", "--emit", "tree")
    assert run(capsys, *args) == run(capsys, *args)
    args = ("--seed", 9, "desk-check", "--count", 3, "--steps", 40)
    assert run(capsys, *args) == run(capsys, *args)
