"""A small first-order call-by-name language over Peano numbers and constructors.

Surface syntax::

    f(0)=0; f(x+1)=f(g(x+1))+1;

Variables are identifiers starting with ``x``.  ``0`` is the constructor
``Z`` and ``t+1`` is ``S(t)``.  Any other identifier applied to arguments is a
call if the program defines it, and a constructor otherwise.

Every call node carries an id (``cid``) that survives driving steps which do
not rewrite it; these ids play the role of letter occurrences in the stack
words extracted from configurations.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterator

from .labels import LabelRegistry
from .words import EMPTY, GWord, LayeredWord, Letter


class LangError(ValueError):
    pass


class StuckError(LangError):
    pass


class BudgetError(LangError):
    pass


_cids = itertools.count()


def fresh_cid() -> int:
    return next(_cids)


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Con:
    name: str
    args: tuple["Term", ...] = ()


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Term", ...] = ()
    cid: int = field(default_factory=fresh_cid, compare=False)


Term = Var | Con | Call

ZERO = Con("Z")


def succ(t: Term, k: int = 1) -> Term:
    for _ in range(k):
        t = Con("S", (t,))
    return t


def num(n: int) -> Term:
    return succ(ZERO, n)


def to_int(t: Term) -> int | None:
    k = 0
    while isinstance(t, Con) and t.name == "S" and len(t.args) == 1:
        t, k = t.args[0], k + 1
    return k if t == ZERO else None


# traversal -------------------------------------------------------------------


def subterms(t: Term) -> Iterator[tuple[tuple[int, ...], Term]]:
    """Pre-order ``(path, subterm)`` pairs; a path lists argument indices from the root."""
    stack = [((), t)]
    while stack:
        p, s = stack.pop()
        yield p, s
        if not isinstance(s, Var):
            for i in range(len(s.args) - 1, -1, -1):
                stack.append((p + (i,), s.args[i]))


def at(t: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        t = t.args[i]
    return t


def replace_at(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    i = path[0]
    args = list(t.args)
    args[i] = replace_at(args[i], path[1:], new)
    return replace(t, args=tuple(args))


def variables(t: Term) -> list[str]:
    """Variable names in order of first occurrence."""
    seen: dict[str, None] = {}
    for _, s in subterms(t):
        if isinstance(s, Var):
            seen.setdefault(s.name, None)
    return list(seen)


def calls(t: Term) -> list[Call]:
    return [s for _, s in subterms(t) if isinstance(s, Call)]


def has_call(t: Term) -> bool:
    return any(isinstance(s, Call) for _, s in subterms(t))


def cids(t: Term) -> set[int]:
    return {c.cid for c in calls(t)}


def substitute(t: Term, sigma: dict[str, Term]) -> Term:
    """Apply ``sigma``; call ids in ``t`` are kept."""
    if isinstance(t, Var):
        return sigma.get(t.name, t)
    if not t.args:
        return t
    return replace(t, args=tuple(substitute(a, sigma) for a in t.args))


def refresh(t: Term) -> Term:
    """Copy of ``t`` with fresh ids on every call."""
    if isinstance(t, Var):
        return t
    args = tuple(refresh(a) for a in t.args)
    return Call(t.name, args) if isinstance(t, Call) else replace(t, args=args)


def compose(sigma: dict[str, Term], tau: dict[str, Term]) -> dict[str, Term]:
    """``x -> tau(sigma(x))``, i.e. first ``sigma`` then ``tau``."""
    out = {k: substitute(v, tau) for k, v in sigma.items()}
    for k, v in tau.items():
        out.setdefault(k, v)
    return out


_VAR_INDEX = re.compile(r"x(\d*)$")


def var_index(name: str) -> int:
    m = _VAR_INDEX.match(name)
    return int(m.group(1) or 0) if m else 0


def next_var_index(*terms: Term) -> int:
    return 1 + max((var_index(v) for t in terms for v in variables(t)), default=0)


def var_name(k: int) -> str:
    return "x" if k == 0 else f"x{k}"


# printing --------------------------------------------------------------------


def show(t: Term) -> str:
    n = to_int(t)
    if n is not None:
        return str(n)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Con) and t.name == "S" and len(t.args) == 1:
        return f"{show(t.args[0])}+1"
    if isinstance(t, Con) and not t.args:
        return t.name
    return f"{t.name}({','.join(show(a) for a in t.args)})"


# programs ----------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    name: str
    patterns: tuple[Term, ...]
    body: Term

    def __str__(self) -> str:
        return f"{self.name}({','.join(show(p) for p in self.patterns)})={show(self.body)}"


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]

    @property
    def functions(self) -> dict[str, tuple[Rule, ...]]:
        out: dict[str, list[Rule]] = {}
        for r in self.rules:
            out.setdefault(r.name, []).append(r)
        return {k: tuple(v) for k, v in out.items()}

    def arity(self, name: str) -> int:
        return len(self.functions[name][0].patterns)

    def __str__(self) -> str:
        return "\n".join(f"{r};" for r in self.rules)


def classify(program: Program, name: str) -> str:
    """``"f"`` for a single rule with only variable patterns, ``"g"`` otherwise."""
    rules = program.functions[name]
    if len(rules) == 1 and all(isinstance(p, Var) for p in rules[0].patterns):
        return "f"
    return "g"


# parsing -----------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_']*)|(.))")


@dataclass
class _App:
    name: str
    args: list
    applied: bool


def _tokenize(text: str) -> list[str]:
    text = re.sub(r"#[^\n]*", "", text)
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        pos = m.end()
        tok = m.group(0).strip()
        if tok:
            out.append(tok)
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise LangError(f"expected {expected or 'a token'}, found {tok!r}")
        self.i += 1
        return tok

    def expr(self):
        t = self.primary()
        while self.peek() == "+":
            self.take("+")
            k = self.take()
            if not k.isdigit():
                raise LangError(f"expected a number after '+', found {k!r}")
            t = ("succ", t, int(k))
        return t

    def primary(self):
        tok = self.take()
        if tok.isdigit():
            return ("num", int(tok))
        if not re.match(r"[A-Za-z_]", tok):
            raise LangError(f"unexpected {tok!r}")
        if self.peek() == "(":
            self.take("(")
            args = []
            if self.peek() != ")":
                args.append(self.expr())
                while self.peek() == ",":
                    self.take(",")
                    args.append(self.expr())
            self.take(")")
            return ("app", tok, args)
        return ("name", tok)


def _resolve(raw, funcs: set[str]) -> Term:
    tag = raw[0]
    if tag == "num":
        return num(raw[1])
    if tag == "succ":
        return succ(_resolve(raw[1], funcs), raw[2])
    if tag == "name":
        name = raw[1]
        if name.startswith("x"):
            return Var(name)
        if name in funcs:
            return Call(name, ())
        return Con(name)
    name, args = raw[1], tuple(_resolve(a, funcs) for a in raw[2])
    if name.startswith("x"):
        raise LangError(f"variable {name} cannot be applied")
    return Call(name, args) if name in funcs else Con(name, args)


def parse_program(text: str, strict: bool = True) -> Program:
    """Parse ``;``-terminated rules.  ``strict`` enforces flat patterns ``C(x1,...,xn)``."""
    p = _Parser(text)
    raw_rules = []
    while p.peek() is not None:
        head = p.primary()
        if head[0] != "app":
            raise LangError(f"rule head must be an application, found {head!r}")
        p.take("=")
        body = p.expr()
        p.take(";")
        raw_rules.append((head, body))
    funcs = {h[1] for h, _ in raw_rules}
    rules = []
    for (_, name, args), body in raw_rules:
        pats = tuple(_resolve(a, set()) for a in args)
        rules.append(Rule(name, pats, _resolve(body, funcs)))
    prog = Program(tuple(rules))
    check_program(prog, strict)
    return prog


def parse_term(text: str, program: Program | None = None) -> Term:
    p = _Parser(text)
    raw = p.expr()
    if p.peek() is not None:
        raise LangError(f"trailing input at {p.peek()!r}")
    funcs = set(program.functions) if program else set()
    return _resolve(raw, funcs)


def check_program(prog: Program, strict: bool = True) -> None:
    arity: dict[str, int] = {}
    for r in prog.rules:
        if arity.setdefault(r.name, len(r.patterns)) != len(r.patterns):
            raise LangError(f"function {r.name} used with different arities")
    for r in prog.rules:
        seen: list[str] = []
        for pat in r.patterns:
            if has_call(pat):
                raise LangError(f"{r}: patterns cannot contain calls")
            if strict and isinstance(pat, Con) and not all(isinstance(a, Var) for a in pat.args):
                raise LangError(f"{r}: pattern {show(pat)} is not flat")
            seen.extend(variables(pat))
        if len(seen) != len(set(seen)):
            raise LangError(f"{r}: repeated pattern variable")
        free = set(variables(r.body)) - set(seen)
        if free:
            raise LangError(f"{r}: unbound variables {sorted(free)}")
        for c in calls(r.body):
            if len(c.args) != arity[c.name]:
                raise LangError(f"{r}: call {c.name} has wrong arity")


# matching and driving --------------------------------------------------------------


@dataclass(frozen=True)
class MatchOutcome:
    kind: str                                  # "fail", "need", "narrow", "ok"
    bindings: dict | None = None
    need: tuple[int, ...] | None = None        # path (from the call) of a blocking call
    var: str | None = None                     # variable to narrow
    pattern: Term | None = None                # pattern it is narrowed against


def match_args(patterns: tuple[Term, ...], args: tuple[Term, ...]) -> MatchOutcome:
    bindings: dict[str, Term] = {}
    need = narrow = None
    clash = False

    def walk(p: Term, a: Term, path: tuple[int, ...]) -> None:
        nonlocal need, narrow, clash
        if isinstance(p, Var):
            bindings[p.name] = a
            return
        if isinstance(a, Call):
            need = need or path
            return
        if isinstance(a, Var):
            narrow = narrow or (a.name, p)
            return
        if a.name != p.name or len(a.args) != len(p.args):
            clash = True
            return
        for i, (pp, aa) in enumerate(zip(p.args, a.args)):
            walk(pp, aa, path + (i,))

    for i, (p, a) in enumerate(zip(patterns, args)):
        walk(p, a, (i,))
    if clash:
        return MatchOutcome("fail")
    if need is not None:
        return MatchOutcome("need", need=need)
    if narrow is not None:
        return MatchOutcome("narrow", var=narrow[0], pattern=narrow[1])
    return MatchOutcome("ok", bindings=bindings)


def blocking_path(program: Program, call: Call) -> tuple[int, ...] | None:
    """Path (relative to ``call``) of the argument call that must be evaluated first, or None if ready.

    Rules are scanned in order; a rule that can only be decided by evaluating an
    argument call makes the call unready.  Rules that would need narrowing do
    not stop the scan, an exact match does.
    """
    for r in program.functions[call.name]:
        out = match_args(r.patterns, call.args)
        if out.kind == "need":
            return out.need
        if out.kind == "ok":
            return None
    return None


def find_redex(program: Program, term: Term) -> tuple[int, ...] | None:
    """Path to the call that call-by-name evaluation rewrites next."""
    if isinstance(term, Var):
        return None
    if isinstance(term, Con):
        for i, a in enumerate(term.args):
            sub = find_redex(program, a)
            if sub is not None:
                return (i,) + sub
        return None
    block = blocking_path(program, term)
    if block is None:
        return ()
    return block + find_redex(program, at(term, block))


@dataclass(frozen=True)
class Branch:
    subst: dict                # narrowing substitution, empty for a plain step
    term: Term


@dataclass(frozen=True)
class DriveResult:
    redex_path: tuple[int, ...]
    redex: Call
    branches: tuple[Branch, ...]


def instantiate(body: Term, bindings: dict[str, Term]) -> Term:
    """Body with arguments substituted; body calls get fresh ids and so do repeated argument copies."""
    used: set[str] = set()

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            v = bindings[t.name]
            if t.name in used:
                return refresh(v)
            used.add(t.name)
            return v
        args = tuple(go(a) for a in t.args)
        return Call(t.name, args) if isinstance(t, Call) else replace(t, args=args)

    return go(body)


def drive(program: Program, term: Term) -> DriveResult | None:
    """One call-by-name rewrite of the redex, splitting on free variables where a pattern needs it.

    Returns None when the term has no calls.  Branches follow rule order; a
    branch is added for every rule that matches after narrowing, up to and
    including the first rule that matches without narrowing.
    """
    path = find_redex(program, term)
    if path is None:
        return None
    redex = at(term, path)
    start = next_var_index(term)
    branches: list[Branch] = []
    for r in program.functions[redex.name]:
        counter = itertools.count(start)
        sigma: dict[str, Term] = {}
        args = redex.args
        while True:
            out = match_args(r.patterns, args)
            if out.kind == "narrow":
                fresh = {v: Var(var_name(next(counter))) for v in variables(out.pattern)}
                step = {out.var: substitute(out.pattern, fresh)}
                sigma = compose(sigma, step)
                args = tuple(substitute(a, step) for a in args)
                continue
            break
        if out.kind == "fail":
            continue
        if out.kind == "need":
            raise LangError(f"internal: redex {show(redex)} is not ready")
        rhs = instantiate(r.body, out.bindings)
        new = replace_at(substitute(term, sigma), path, rhs)
        branches.append(Branch(sigma, new))
        if not sigma:
            break
    return DriveResult(path, redex, tuple(branches))


def eval_ground(program: Program, term: Term, max_steps: int = 100_000) -> Term:
    """Normal form of a ground term under call-by-name evaluation."""
    if variables(term):
        raise LangError(f"term {show(term)} is not ground")
    for _ in range(max_steps):
        res = drive(program, term)
        if res is None:
            return term
        if not res.branches:
            raise StuckError(f"no rule for {show(res.redex)}")
        term = res.branches[0].term
    raise BudgetError(f"evaluation exceeded {max_steps} steps")


def drive_path(program: Program, term: Term, steps: int, choose: str = "last") -> tuple[list[Term], list[int]]:
    """Follow one branch per step; returns the terms and the redex ids rewritten between them."""
    terms, redexes = [term], []
    for _ in range(steps):
        res = drive(program, terms[-1])
        if res is None or not res.branches:
            break
        b = res.branches[-1] if choose == "last" else res.branches[0]
        terms.append(b.term)
        redexes.append(res.redex.cid)
    return terms, redexes


# marking and stack extraction ----------------------------------------------------------


@dataclass
class CallNode:
    call: Call
    ready: bool
    children: list["CallNode"]
    needed: int | None = None      # index into ``children`` of the argument call that blocks
    label: int | None = None


def _top_calls(t: Term, path: tuple[int, ...] = ()) -> list[tuple[tuple[int, ...], Call]]:
    if isinstance(t, Var):
        return []
    if isinstance(t, Call):
        return [(path, t)]
    out = []
    for i, a in enumerate(t.args):
        out.extend(_top_calls(a, path + (i,)))
    return out


def mark_calls(program: Program, term: Term) -> list[CallNode]:
    """Tree of calls with static (constructor) nodes deleted, each marked ready or not."""

    def build(c: Call) -> CallNode:
        kids = []
        paths = []
        for i, a in enumerate(c.args):
            for p, cc in _top_calls(a, (i,)):
                kids.append(build(cc))
                paths.append(p)
        block = blocking_path(program, c)
        needed = paths.index(block) if block is not None else None
        return CallNode(c, block is None, kids, needed)

    return [build(c) for _, c in _top_calls(term)]


def extract_stack_word(reg: LabelRegistry, program: Program, term: Term) -> GWord:
    """Stack word of a configuration.

    Each top-level call gets a fresh root label and descendants get fresh child
    labels, except that an unready call with a single argument call passes its
    own label on.  Same-label calls form one group (innermost first).  The
    visible layer is the chain of groups from the first top-level call down to
    the redex, innermost group first; every other group is invisible, in
    pre-order.
    """
    roots = mark_calls(program, term)
    if not roots:
        return GWord(EMPTY, EMPTY)
    groups: dict[int, list[CallNode]] = {}
    order: list[int] = []

    def assign(n: CallNode, label: int) -> None:
        n.label = label
        if label not in groups:
            groups[label] = []
            order.append(label)
        groups[label].append(n)
        if not n.ready and len(n.children) == 1:
            assign(n.children[0], label)
        else:
            for c in n.children:
                assign(c, reg.new_child(label))

    for r in roots:
        assign(r, reg.new_root())

    def letters(label: int) -> tuple[Letter, ...]:
        return tuple(Letter(n.call.name, label, n.call.cid) for n in reversed(groups[label]))

    active: list[int] = []
    node = roots[0]
    while True:
        active.append(node.label)
        deepest = groups[node.label][-1]
        if deepest.ready:
            break
        node = deepest.children[deepest.needed]
    visible = tuple(x for lab in reversed(active) for x in letters(lab))
    invisible = tuple(x for lab in order if lab not in active for x in letters(lab))
    return GWord(LayeredWord(visible), LayeredWord(invisible))


def stack_word(program: Program, term: Term) -> GWord:
    return extract_stack_word(LabelRegistry(), program, term)
