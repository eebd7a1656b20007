"""Command-line front end.

Exit codes: 0 on success, 1 on domain errors (bad input, failed checks),
2 when a search or step budget runs out before an answer is known.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import constructions as con
from . import mlpg as mg
from . import prefix as pg
from . import scp
from .labels import LabelError
from .lang import LangError, drive_path, parse_program, parse_term, show
from .layerfns import LayerFnError
from .whistles import RELATIONS, find_first_pair, path_trace
from .words import plain, plain_str

EXIT_OK, EXIT_DOMAIN, EXIT_BUDGET = 0, 1, 2

DOMAIN_ERRORS = (
    pg.PrefixGrammarError, mg.MlpgError, LangError, LabelError, LayerFnError,
    con.ConstructionError, ValueError, OSError,
)


class BudgetExceeded(Exception):
    pass


def _read(path: str) -> str:
    return Path(path).read_text()


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _relation(args) -> str:
    rel = args.whistle or args.relation or "turchin"
    if rel not in RELATIONS:
        raise ValueError(f"unknown relation {rel!r}; choose from {', '.join(RELATIONS)}")
    return rel


# subcommands ----------------------------------------------------------------


def cmd_pg_run(args) -> int:
    grammar = pg.parse_prefix_grammar(_read(args.file))
    if args.policy == "ordered":
        t = pg.run_ordered(grammar, args.steps)
        print(" -> ".join(plain_str(t.plain(k)) or "Λ" for k in range(len(t.words))))
        return EXIT_OK
    for t in pg.run_all(grammar, args.steps):
        print(" -> ".join(plain_str(t.plain(k)) or "Λ" for k in range(len(t.words))))
    return EXIT_OK


def _print_session(s: mg.TraceSession) -> None:
    for k in range(len(s.words)):
        rule = s.events[k - 1].rule if k else "init"
        print(f"{k:>4} {rule:<8} {s.format(k)}")
    if s.halted:
        print(f"halted: {plain_str(s.output) or 'Λ'}")


def cmd_mlpg_run(args) -> int:
    grammar = _load_mlpg(args.file)
    sessions = mg.run(grammar, args.policy, args.steps, jobs=args.jobs)
    for n, s in enumerate(sessions):
        if len(sessions) > 1:
            print(f"trace {n}")
        _print_session(s)
    return EXIT_OK


def _load_mlpg(name: str) -> mg.Mlpg:
    if name == "explang":
        return con.explang()
    return mg.parse_mlpg(_read(name))


def cmd_mlpg_lang(args) -> int:
    grammar = _load_mlpg(args.file)
    res = mg.enumerate_language(grammar, args.max_len, max_steps=args.steps, max_states=args.max_states)
    print(con.format_language(res.words))
    if res.exhausted:
        raise BudgetExceeded(f"state budget of {args.max_states} exhausted; the list may be incomplete")
    return EXIT_OK


def cmd_whistle(args) -> int:
    rel = _relation(args)
    suffix = Path(args.file).suffix
    if suffix == ".l":
        if not args.entry:
            raise ValueError("--entry is required for program files")
        program = parse_program(_read(args.file))
        terms, redexes = drive_path(program, parse_term(args.entry, program), args.steps,
                                    choose=args.branch)
        trace = path_trace(program, terms, redexes)
        for k, t in enumerate(terms):
            print(f"{k:>4} {show(t)}  [{plain_str(plain(trace.words[k].visible))}]")
        pair = find_first_pair(trace, rel, terms)
        if pair is None:
            raise BudgetExceeded(f"no {rel} pair within {len(terms)} configurations")
        print(pair.line(terms))
        return EXIT_OK
    if rel != "turchin":
        raise ValueError(f"relation {rel} needs terms; use a program file with --entry")
    if suffix == ".pg":
        t = pg.run_ordered(pg.parse_prefix_grammar(_read(args.file)), args.steps + 1)
        for j in range(1, len(t.words)):
            for i in range(j):
                v = pg.turchin_pair_plain(t, i, j)
                if v is not None:
                    print(f"TURCHIN i={v.i} j={v.j} top={plain_str(v.top)} "
                          f"mid={plain_str(v.mid)} ctx={plain_str(v.context)}")
                    return EXIT_OK
        raise BudgetExceeded(f"no turchin pair within {len(t.words)} words")
    s = mg.run_ordered(_load_mlpg(args.file), args.steps)
    pair = find_first_pair(s.stack_trace(), "turchin")
    if pair is None:
        raise BudgetExceeded(f"no turchin pair within {len(s.words)} words")
    print(pair.line())
    return EXIT_OK


def cmd_scp(args) -> int:
    rel = _relation(args)
    program = parse_program(_read(args.file))
    entry = parse_term(args.entry, program)
    graph = scp.unfold(program, entry, rel, args.max_nodes)
    if graph.exhausted:
        raise BudgetExceeded(f"node budget of {args.max_nodes} exhausted; the graph has open leaves")
    if args.emit == "residual":
        text = scp.residualize(graph).text()
    elif args.emit == "tree":
        text = scp.tree_text(program, graph)
    else:
        text = scp.dot_text(program, graph)
    _emit(args, text)
    return EXIT_OK


def cmd_construct(args) -> int:
    if args.kind == "explang":
        _emit(args, mg.format_mlpg(con.explang()))
        return EXIT_OK
    if not args.file:
        raise ValueError(f"construct {args.kind} needs an input file")
    if args.kind == "tm":
        tm = con.parse_tm(_read(args.file))
        tape = list(args.input.split() if " " in args.input else args.input)
        _emit(args, mg.format_mlpg(con.tm_to_mlpg(tm, tape)))
        if args.steps:
            got, want = con.tm_bisimulation(tm, tape, args.steps)
            if got != want:
                k = next((k for k, (a, b) in enumerate(zip(got, want)) if a != b), min(len(got), len(want)))
                print(f"bisimulation: differs at configuration {k}", file=sys.stderr)
                return EXIT_DOMAIN
            print(f"bisimulation: {len(got)} configurations agree", file=sys.stderr)
        return EXIT_OK
    cfg = con.parse_cfg(_read(args.file))
    _emit(args, mg.format_mlpg(con.cfg_to_mlpg(cfg)))
    if args.max_len:
        res = con.cfg_language_via_mlpg(cfg, args.max_len)
        oracle = {w for w in con.cfg_language(cfg, args.max_len) if w}
        got = {w for w in res.words if w}
        print(f"language up to {args.max_len}: {con.format_language(got)}", file=sys.stderr)
        if res.exhausted:
            raise BudgetExceeded("state budget exhausted")
        if got != oracle:
            print(f"differs from the derivation enumerator: {con.format_language(got ^ oracle)}",
                  file=sys.stderr)
            return EXIT_DOMAIN
    return EXIT_OK


def cmd_desk_check(args) -> int:
    """Random alphabetic grammars: does every long ordered trace contain a Turchin pair?"""
    rng = random.Random(args.seed)
    sampled = excluded = fired = 0
    latest = 0
    while sampled < args.count:
        g = mg.random_alphabetic_mlpg(rng)
        s = mg.run_ordered(g, args.steps - 1, max_size=2000)
        if len(s.words) < args.steps:
            excluded += 1
            continue
        sampled += 1
        pair = find_first_pair(s.stack_trace(), "turchin")
        if pair is not None:
            fired += 1
            latest = max(latest, pair.j)
        else:
            print(mg.format_mlpg(g))
    print(f"sampled={sampled} excluded={excluded} fired={fired} latest_j={latest}")
    return EXIT_OK if fired == sampled else EXIT_DOMAIN


# wiring -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stackgram", description="Stack-word grammars, whistles and supercompilation.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized commands")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for all-policy exploration")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, steps: int) -> None:
        sp.add_argument("--steps", type=int, default=steps)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--jobs", type=int, default=argparse.SUPPRESS)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("pg-run", help="trace a plain prefix grammar (--steps counts words)")
    sp.add_argument("file")
    sp.add_argument("--policy", choices=("ordered", "all"), default="ordered")
    common(sp, 10)
    sp.set_defaults(func=cmd_pg_run)

    sp = sub.add_parser("mlpg-run", help="trace a multi-layer prefix grammar")
    sp.add_argument("file")
    sp.add_argument("--policy", choices=("ordered", "all"), default="ordered")
    common(sp, 20)
    sp.set_defaults(func=cmd_mlpg_run)

    sp = sub.add_parser("mlpg-lang", help="enumerate the halting outputs of a grammar")
    sp.add_argument("file", help="grammar file, or 'explang'")
    sp.add_argument("--max-len", type=int, default=16)
    sp.add_argument("--max-states", type=int, default=100_000)
    common(sp, 400)
    sp.set_defaults(func=cmd_mlpg_lang)

    sp = sub.add_parser("whistle", help="first whistle pair on a trace")
    sp.add_argument("file", help=".pg, .mlpg or .l file")
    sp.add_argument("--entry", default=None, help="entry configuration for program files")
    sp.add_argument("--branch", choices=("last", "first"), default="last")
    sp.add_argument("--relation", choices=RELATIONS, default=None)
    sp.add_argument("--whistle", choices=RELATIONS, default=None)
    common(sp, 10)
    sp.set_defaults(func=cmd_whistle)

    sp = sub.add_parser("scp", help="supercompile a program")
    sp.add_argument("file")
    sp.add_argument("--entry", required=True)
    sp.add_argument("--relation", choices=RELATIONS, default=None)
    sp.add_argument("--whistle", choices=RELATIONS, default=None)
    sp.add_argument("--emit", choices=("residual", "tree", "dot"), default="residual")
    sp.add_argument("--max-nodes", type=int, default=1000)
    common(sp, 0)
    sp.set_defaults(func=cmd_scp)

    sp = sub.add_parser("construct", help="build a grammar from a machine, a context-free grammar, or ExpLang")
    sp.add_argument("kind", choices=("tm", "cfg", "explang"))
    sp.add_argument("file", nargs="?")
    sp.add_argument("--input", default="", help="initial tape for machines")
    sp.add_argument("--max-len", type=int, default=0, help="compare languages up to this length")
    common(sp, 0)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("desk-check", help="Turchin pairs on random alphabetic grammars")
    sp.add_argument("--count", type=int, default=100)
    common(sp, 300)
    sp.set_defaults(func=cmd_desk_check)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"budget: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except DOMAIN_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
