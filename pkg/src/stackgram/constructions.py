"""Grammars built from other devices: Turing machines, context-free grammars, and a
language of words ``b^(2^n)`` that no context-free grammar generates.

Turing machine encoding
-----------------------
The visible layer holds the state letter, the scanned cell and the tape to
its right, closed by ``Blank^R``.  The invisible layer holds the tape to the
left of the head as a chain of labels: the nearest cell has the label closest
to the state's label.  ``Blank^L`` sits at the far end of that chain.  A state
letter ``q^R`` comes before the scanned cell, and ``q^L`` after it.
Right moves insert the written symbol between the head label and the top of
the chain; left moves pop the top of the chain into the visible layer.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass

from .labels import LabelRegistry
from .layerfns import LayerFn
from .mlpg import (
    HeadItem,
    Mlpg,
    MlpgError,
    MlpgRule,
    RepItem,
    TraceSession,
    enumerate_language,
    matches,
    try_step,
)
from .words import GWord, plain

BLANK_L = "Blank^L"
BLANK_R = "Blank^R"


class ConstructionError(ValueError):
    pass


# Turing machines ------------------------------------------------------------------


@dataclass(frozen=True)
class TM:
    states: tuple[str, ...]
    tape_alphabet: tuple[str, ...]     # includes the blank
    blank: str
    start: str
    finals: frozenset[str]
    delta: dict                        # (state, symbol) -> (state, symbol, "L" | "R")

    def __post_init__(self):
        for (q, a), (q2, a2, d) in self.delta.items():
            if q in self.finals:
                raise ConstructionError(f"final state {q} has an outgoing transition")
            if d not in ("L", "R"):
                raise ConstructionError(f"bad direction {d!r}")
            for s in (q, q2):
                if s not in self.states:
                    raise ConstructionError(f"unknown state {s}")
            for s in (a, a2):
                if s not in self.tape_alphabet:
                    raise ConstructionError(f"unknown tape symbol {s}")


def parse_tm(text: str) -> TM:
    """Line format::

        states: q0 q1 qf
        tape: 1 b
        blank: b
        start: q0
        final: qf
        q0 1 -> q0 1 R

    A transition line may start with ``delta:``; the blank defaults to ``_``.
    """
    fields: dict[str, list[str]] = {}
    delta = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"(states|tape|blank|start|final):\s*(.*)$", line)
        if m:
            fields[m.group(1)] = m.group(2).split()
            continue
        line = re.sub(r"^delta:\s*", "", line)
        m = re.match(r"(\S+)\s+(\S+)\s*->\s*(\S+)\s+(\S+)\s+([LR])$", line)
        if not m:
            raise ConstructionError(f"line {lineno}: cannot parse {raw.strip()!r}")
        q, a, q2, a2, d = m.groups()
        if (q, a) in delta:
            raise ConstructionError(f"line {lineno}: machine is not deterministic on ({q}, {a})")
        delta[(q, a)] = (q2, a2, d)
    try:
        blank = fields["blank"][0] if "blank" in fields else "_"
        return TM(tuple(fields["states"]), tuple(fields["tape"]), blank,
                  fields["start"][0], frozenset(fields.get("final", [])), delta)
    except KeyError as e:
        raise ConstructionError(f"missing field {e.args[0]}") from None


def qR(q: str) -> str:
    return f"{q}^R"


def qL(q: str) -> str:
    return f"{q}^L"


def tm_to_mlpg(tm: TM, tape: list[str] | tuple[str, ...]) -> Mlpg:
    alphabet = set(tm.tape_alphabet) | {BLANK_L, BLANK_R}
    alphabet |= {qR(q) for q in tm.states} | {qL(q) for q in tm.states}
    rules: list[MlpgRule] = []
    names = itertools.count(1)

    def push(a: str) -> tuple[LayerFn, ...]:
        return (LayerFn("ins", 1, (a,)),)

    for (q1, a1), (q2, a2, d) in sorted(tm.delta.items()):
        halt = q2 in tm.finals
        # scanned symbols: a1 itself, plus the end markers when a1 is the blank
        for scanned in [a1] + ([BLANK_R, BLANK_L] if a1 == tm.blank else []):
            # shape 1: q1^R before the scanned cell
            if scanned != BLANK_L:
                head = (HeadItem(qR(q1), "i"), HeadItem(scanned, "j"))
                keep_r = (RepItem((BLANK_R,), "j"),) if scanned == BLANK_R else ()
                if d == "R":
                    rep = (RepItem((qR(q2),), "j"),) + keep_r
                    rules.append(MlpgRule(f"T{next(names)}", head, rep, push(a2), None, halt))
                else:
                    rep = (RepItem((qL(q2), a2), "j"),) + keep_r
                    rules.append(MlpgRule(f"T{next(names)}", head, rep, (), "oldest", halt))
            # shape 2: q1^L after the scanned cell
            if scanned != BLANK_R:
                head = (HeadItem(scanned, "j"), HeadItem(qL(q1), "i"))
                if d == "R":
                    chain = push(a2)
                    if scanned == BLANK_L:
                        chain = (LayerFn("app", "new", (BLANK_L,)),) + chain
                    rules.append(MlpgRule(f"T{next(names)}", head, (RepItem((qR(q2),), "i"),),
                                          chain, None, halt))
                elif scanned == BLANK_L:
                    rep = (RepItem((BLANK_L,), "i.n"), RepItem((qL(q2), a2), "i"))
                    rules.append(MlpgRule(f"T{next(names)}", head, rep, (), None, halt))
                else:
                    rep = (RepItem((qL(q2), a2), "i"),)
                    rules.append(MlpgRule(f"T{next(names)}", head, rep, (), "oldest", halt))
    cells = "".join(f"[{a}@0]" for a in tape)
    init = f"[{qR(tm.start)}@0]{cells}[{BLANK_R}@0] $ [{BLANK_L}@0.0]"
    return Mlpg(frozenset(alphabet), tuple(rules), init)


@dataclass(frozen=True)
class TMConfig:
    state: str
    left: tuple[str, ...]
    scanned: str
    right: tuple[str, ...]


def normalize(cfg: TMConfig, blank: str) -> TMConfig:
    left = list(cfg.left)
    while left and left[0] == blank:
        left.pop(0)
    right = list(cfg.right)
    while right and right[-1] == blank:
        right.pop()
    return TMConfig(cfg.state, tuple(left), cfg.scanned, tuple(right))


def simulate_tm(tm: TM, tape, max_steps: int) -> list[TMConfig]:
    """Direct simulator; stops on a final state, a missing transition, or the step bound."""
    cells = dict(enumerate(tape))
    head, state = 0, tm.start
    out = []

    def snap() -> TMConfig:
        lo = min([head] + list(cells))
        hi = max([head] + list(cells))
        tape_of = [cells.get(k, tm.blank) for k in range(lo, hi + 1)]
        h = head - lo
        return normalize(TMConfig(state, tuple(tape_of[:h]), tape_of[h], tuple(tape_of[h + 1:])), tm.blank)

    out.append(snap())
    for _ in range(max_steps):
        if state in tm.finals:
            break
        key = (state, cells.get(head, tm.blank))
        if key not in tm.delta:
            break
        state, cells[head], d = tm.delta[key]
        head += 1 if d == "R" else -1
        out.append(snap())
    return out


def decode_tm(reg: LabelRegistry, gw: GWord, tm: TM) -> TMConfig:
    vis = plain(gw.visible)

    def blank(a: str) -> str:
        return tm.blank if a in (BLANK_L, BLANK_R) else a

    if len(vis) >= 2 and vis[0].endswith("^R"):
        state, scanned, rest = vis[0][:-2], vis[1], vis[2:]
    elif len(vis) >= 2 and vis[1].endswith("^L"):
        state, scanned, rest = vis[1][:-2], vis[0], vis[2:]
    else:
        raise ConstructionError(f"visible layer {vis} does not encode a configuration")
    if scanned == BLANK_R:
        rest = (BLANK_R,) + rest
    if not rest or rest[-1] != BLANK_R or BLANK_R in rest[:-1]:
        raise ConstructionError(f"right end marker misplaced in {vis}")
    # deepest label = farthest cell from the head
    chain = sorted(gw.invisible.letters, key=lambda x: len(reg.ancestors(x.label)), reverse=True)
    left = [x.letter for x in chain]
    if left and left[0] == BLANK_L:
        left = left[1:]
    if BLANK_L in left:
        raise ConstructionError("left end marker inside the tape")
    cfg = TMConfig(state, tuple(left), blank(scanned), tuple(blank(a) for a in rest[:-1]))
    return normalize(cfg, tm.blank)


def state_letters_placed(gw: GWord) -> bool:
    """``q^R`` only ever first and ``q^L`` only ever second in the visible layer."""
    vis = plain(gw.visible)
    for k, a in enumerate(vis):
        if a.endswith("^R") and a != BLANK_R and k != 0:
            return False
        if a.endswith("^L") and a != BLANK_L and k != 1:
            return False
    return True


def tm_bisimulation(tm: TM, tape, steps: int) -> tuple[list[TMConfig], list[TMConfig]]:
    """Run the grammar and the simulator side by side; returns both decoded configuration lists."""
    g = tm_to_mlpg(tm, tape)
    s = TraceSession.start(g)
    while len(s.events) < steps and not s.halted:
        ms = matches(s)
        if len(ms) > 1:
            raise MlpgError("encoded machine is not deterministic")
        if not ms or not try_step(s, ms[0]):
            break
    decoded = [decode_tm(s.reg, w, tm) for w in s.words]
    return decoded, simulate_tm(tm, tape, steps)


# context-free grammars ---------------------------------------------------------------

POP = "Pop"


@dataclass(frozen=True)
class CFG:
    start: str
    rules: tuple[tuple[str, tuple[str, ...]], ...]      # (lhs, rhs)
    terminals: frozenset[str]

    @property
    def nonterminals(self) -> frozenset[str]:
        return frozenset(lhs for lhs, _ in self.rules) | {self.start}

    def check_gnf(self) -> None:
        for lhs, rhs in self.rules:
            if not rhs:
                continue
            if rhs[0] not in self.terminals or any(x in self.terminals for x in rhs[1:]):
                raise ConstructionError(f"rule {lhs} -> {' '.join(rhs)} is not in Greibach form")


def parse_cfg(text: str) -> CFG:
    """Lines ``S -> a S B``; ``E ->`` is an erasing rule; the first left-hand side is the start.

    Terminals are the right-hand-side symbols that never occur on a left-hand side.
    """
    rules = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"(\S+)\s*->\s*(.*?);?$", line)
        if not m:
            raise ConstructionError(f"line {lineno}: cannot parse {raw.strip()!r}")
        rules.append((m.group(1), tuple(m.group(2).split())))
    if not rules:
        raise ConstructionError("empty grammar")
    lhs = {l for l, _ in rules}
    terms = frozenset(x for _, r in rules for x in r if x not in lhs)
    cfg = CFG(rules[0][0], tuple(rules), terms)
    cfg.check_gnf()
    return cfg


def cfg_to_mlpg(cfg: CFG) -> Mlpg:
    """Nonterminals stay visible under one label; terminals are appended to a single child label.

    ``q -> u q1 ... qn`` rewrites ``q`` to ``q1 ... qn`` and appends ``u``;
    ``q ->`` erases ``q``; the closing ``[Pop]`` marker pops the terminals.
    """
    cfg.check_gnf()
    if POP in cfg.nonterminals | cfg.terminals:
        raise ConstructionError(f"symbol {POP} is reserved for the closing marker")
    rules = []
    for k, (lhs, rhs) in enumerate(cfg.rules, 1):
        head = (HeadItem(lhs, "h"),)
        if not rhs:
            rules.append(MlpgRule(f"C{k}", head))
            continue
        rep = (RepItem(rhs[1:], "h"),) if rhs[1:] else ()
        rules.append(MlpgRule(f"C{k}", head, rep, (LayerFn("app", 1, (rhs[0],)),)))
    rules.append(MlpgRule("Halt", (HeadItem(POP, "h"),), (), (), "oldest", True, True))
    alphabet = frozenset(cfg.nonterminals | cfg.terminals | {POP})
    return Mlpg(alphabet, tuple(rules), f"[{cfg.start}@0][{POP}@0] $")


def nullable(cfg: CFG) -> set[str]:
    out: set[str] = set()
    changed = True
    while changed:
        changed = False
        for lhs, rhs in cfg.rules:
            if lhs not in out and all(x in out for x in rhs):
                out.add(lhs)
                changed = True
    return out


def cfg_language(cfg: CFG, max_len: int) -> set[tuple[str, ...]]:
    """Leftmost-derivation oracle: every terminal word of length ``<= max_len``."""
    null = nullable(cfg)
    by_lhs: dict[str, list[tuple[str, ...]]] = {}
    for lhs, rhs in cfg.rules:
        by_lhs.setdefault(lhs, []).append(rhs)
    start = ((), (cfg.start,))
    seen = {start}
    todo = deque([start])
    out = set()
    while todo:
        done, stack = todo.popleft()
        if not stack:
            out.add(done)
            continue
        q, rest = stack[0], stack[1:]
        for rhs in by_lhs.get(q, []):
            nd = done + rhs[:1]
            ns = rhs[1:] + rest
            if len(nd) + sum(1 for x in ns if x not in null) > max_len:
                continue
            st = (nd, ns)
            if st not in seen:
                seen.add(st)
                todo.append(st)
    return out


def cfg_language_via_mlpg(cfg: CFG, max_len: int, max_states: int = 200_000):
    """Language of the encoded grammar, with a pruning bound that cannot lose short words."""
    g = cfg_to_mlpg(cfg)
    null = nullable(cfg)

    solid = cfg.nonterminals - null

    def prune(gw: GWord) -> bool:
        pending = sum(1 for x in gw.visible.letters if x.letter in solid)
        return len(gw.invisible) + pending > max_len

    steps = 2 + max_len * (2 + max((len(r) for _, r in cfg.rules), default=1))
    steps += len(cfg.rules) * (max_len + 2)
    return enumerate_language(g, max_len, max_steps=steps, max_states=max_states, prune=prune)


def random_gnf(rng, n_nonterminals: int = 3, n_terminals: int = 2, n_rules: int = 6) -> CFG:
    """Random grammar whose rules have the shapes ``q -> u q1 q2`` and ``q ->``."""
    nts = [f"N{k}" for k in range(n_nonterminals)]
    ts = "abc"[:n_terminals]
    rules = [("N0", (rng.choice(ts), rng.choice(nts), rng.choice(nts)))]
    for _ in range(n_rules - 1):
        lhs = rng.choice(nts)
        if rng.random() < 0.35:
            rules.append((lhs, ()))
        else:
            rules.append((lhs, (rng.choice(ts), rng.choice(nts), rng.choice(nts))))
    # every nonterminal gets an erasing rule so that short words exist
    for q in nts:
        if (q, ()) not in rules:
            rules.append((q, ()))
    return CFG("N0", tuple(rules), frozenset(ts))


# the exponential language ------------------------------------------------------------------

EXPLANG_TEXT = """\
# words b^(2^n), n >= 1
alphabet: a b
init: [a@0] $ [b@0.0][b@0.0]
rule R1 pop(oldest): head a@h => pop ++ [a@h] layer: id
rule R2 halt pop(oldest): head a@h $ => pop layer: id
rule R3: head b@h => layer: app(h.child#1, "bb")
"""


def explang() -> Mlpg:
    from .mlpg import parse_mlpg
    return parse_mlpg(EXPLANG_TEXT)


def format_language(words) -> str:
    """Words by length then lexicographically; a run of one letter longer than 8 prints as ``b^16``."""
    def one(w: tuple[str, ...]) -> str:
        if not w:
            return "Λ"
        if len(w) > 8 and len(set(w)) == 1:
            return f"{w[0]}^{len(w)}"
        return "".join(w) if all(len(a) == 1 for a in w) else " ".join(w)

    return " ".join(one(w) for w in sorted(words, key=lambda w: (len(w), w)))
