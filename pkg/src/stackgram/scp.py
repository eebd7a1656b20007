"""A small positive supercompiler for the call-by-name language.

Process graph nodes:

* ``drive``: a call-rooted configuration that was rewritten one step
  (children are the branches, edges carry narrowing substitutions);
* ``cons``: a constructor-rooted configuration split into its arguments;
* ``let``: ``let v1=t1, ... in body``; children are the bindings, then the body;
* ``fold``: a renaming of a driven ancestor;
* ``leaf``: no calls left;
* ``stuck``: no rule applies;
* ``frontier``: left open because the node budget ran out.

Whistles see only driven ancestors on the path, across let boundaries.
Folding is tried before the whistle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .lang import (
    Call,
    Con,
    LangError,
    Program,
    Rule,
    Term,
    Var,
    at,
    cids,
    compose,
    drive,
    has_call,
    next_var_index,
    replace_at,
    show,
    stack_word,
    subterms,
    substitute,
    var_name,
    variables,
)
from .whistles import RELATIONS, Pair, StackTrace, first_pair_ending_at
from .words import plain, plain_str


class ScpError(LangError):
    pass


@dataclass(eq=False)
class Node:
    id: int
    term: Term
    parent: Node | None = None
    edge: dict = field(default_factory=dict)
    kind: str = "open"
    children: list[Node] = field(default_factory=list)
    redex_cid: int | None = None
    let_vars: tuple[str, ...] = ()
    target: Node | None = None
    renaming: dict = field(default_factory=dict)
    alive: bool = True

    def path(self) -> list[Node]:
        out = []
        n: Node | None = self
        while n is not None:
            out.append(n)
            n = n.parent
        return out[::-1]

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


@dataclass(frozen=True)
class Firing:
    relation: str
    earlier: Term
    later: Term
    pair: Pair


@dataclass
class Graph:
    root: Node
    relation: str
    first_fire: Firing | None = None
    fires: list[Firing] = field(default_factory=list)
    created: int = 0
    exhausted: bool = False

    def nodes(self) -> list[Node]:
        return list(self.root.walk())


# renaming, instance, msg -----------------------------------------------------------


def renaming(a: Term, b: Term) -> dict[str, str] | None:
    """Bijective variable renaming ``r`` with ``r(a) == b`` (call ids ignored)."""
    fwd: dict[str, str] = {}
    back: dict[str, str] = {}

    def go(x: Term, y: Term) -> bool:
        if isinstance(x, Var) or isinstance(y, Var):
            if not (isinstance(x, Var) and isinstance(y, Var)):
                return False
            if fwd.setdefault(x.name, y.name) != y.name or back.setdefault(y.name, x.name) != x.name:
                return False
            return True
        if type(x) is not type(y) or x.name != y.name or len(x.args) != len(y.args):
            return False
        return all(go(p, q) for p, q in zip(x.args, y.args))

    return fwd if go(a, b) else None


def msg(a: Term, b: Term, keep: str = "left") -> tuple[Term, dict[str, Term], dict[str, Term]]:
    """Most specific generalization ``g`` with ``s1(g) = a`` and ``s2(g) = b``.

    Shared variables are kept; each distinct mismatching pair gets one fresh
    variable.  Call ids of ``g`` come from the ``keep`` side.
    """
    counter = itertools.count(next_var_index(a, b))
    pairs: dict[tuple[Term, Term], str] = {}
    s1: dict[str, Term] = {}
    s2: dict[str, Term] = {}

    def go(x: Term, y: Term) -> Term:
        if isinstance(x, Var) and isinstance(y, Var) and x.name == y.name:
            s1.setdefault(x.name, x)
            s2.setdefault(y.name, y)
            return x
        if (not isinstance(x, Var) and type(x) is type(y) and x.name == y.name
                and len(x.args) == len(y.args)):
            args = tuple(go(p, q) for p, q in zip(x.args, y.args))
            src = x if keep == "left" else y
            if isinstance(src, Call):
                return Call(src.name, args, src.cid)
            return Con(src.name, args)
        key = (x, y)
        if key not in pairs:
            v = var_name(next(counter))
            pairs[key] = v
            s1[v], s2[v] = x, y
        return Var(pairs[key])

    g = go(a, b)
    # drop identity entries for shared variables
    s1 = {k: v for k, v in s1.items() if not (isinstance(v, Var) and v.name == k)}
    s2 = {k: v for k, v in s2.items() if not (isinstance(v, Var) and v.name == k)}
    return g, s1, s2


def is_variable_renaming(s: dict[str, Term]) -> bool:
    vals = list(s.values())
    return all(isinstance(v, Var) for v in vals) and len({v.name for v in vals}) == len(vals)


# unfolding ---------------------------------------------------------------------------


class _Builder:
    def __init__(self, program: Program, relation: str, max_nodes: int):
        if relation not in RELATIONS:
            raise ScpError(f"unknown relation {relation!r}")
        self.program = program
        self.relation = relation
        self.max_nodes = max_nodes
        self.ids = itertools.count()
        self.created = 0
        self.work: list[Node] = []
        self.graph: Graph | None = None

    def new(self, term: Term, parent: Node | None, edge: dict | None = None) -> Node:
        self.created += 1
        return Node(next(self.ids), term, parent, dict(edge or {}))

    def push_children(self, node: Node) -> None:
        # stack discipline: first child processed first
        for c in reversed(node.children):
            self.work.append(c)

    def kill(self, node: Node) -> None:
        for c in node.children:
            for d in c.walk():
                d.alive = False
        node.children = []

    # -- main loop
    def run(self, term: Term) -> Graph:
        root = self.new(term, None)
        self.graph = Graph(root, self.relation)
        self.work = [root]
        while self.work:
            node = self.work.pop()
            if not node.alive:
                continue
            if self.created > self.max_nodes:
                node.kind = "frontier"
                self.graph.exhausted = True
                continue
            self.process(node)
        self.graph.created = self.created
        return self.graph

    def process(self, node: Node) -> None:
        t = node.term
        if not has_call(t):
            node.kind = "leaf"
            return
        if isinstance(t, Con):
            node.kind = "cons"
            node.children = [self.new(a, node) for a in t.args]
            self.push_children(node)
            return
        ancestors = [n for n in node.path()[:-1] if n.kind == "drive" and n.alive]
        for a in ancestors:
            r = renaming(a.term, t)
            if r is not None:
                node.kind, node.target, node.renaming = "fold", a, r
                return
        path = ancestors + [node]
        pair = self.whistle(path)
        if pair is not None:
            earlier = path[pair.i]
            fire = Firing(self.relation, earlier.term, t, pair)
            self.graph.fires.append(fire)
            if self.graph.first_fire is None:
                self.graph.first_fire = fire
            if self.generalize(earlier, node, pair):
                return
        res = drive(self.program, t)
        node.redex_cid = res.redex.cid
        if not res.branches:
            node.kind = "stuck"
            return
        node.kind = "drive"
        node.children = [self.new(b.term, node, b.subst) for b in res.branches]
        self.push_children(node)

    def whistle(self, path: list[Node]) -> Pair | None:
        terms = [n.term for n in path]
        trace = None
        if self.relation in ("turchin", "composite"):
            words = [stack_word(self.program, x) for x in terms]
            consumed = [
                frozenset({path[k].redex_cid} | (cids(terms[k]) - cids(terms[k + 1])))
                for k in range(len(path) - 1)
            ]
            trace = StackTrace(words, consumed, 1)
        return first_pair_ending_at(self.relation, trace, terms, len(path) - 1)

    # -- generalization
    def generalize(self, a: Node, b: Node, pair: Pair) -> bool:
        """Rebuild ``a`` or ``b`` as a let; False means nothing could be abstracted."""
        v = pair.verdict
        if v is not None and v.ell > 0:
            word = stack_word(self.program, a.term)
            cid = word.visible.letters[len(v.top) - 1].uid
            pos = next(p for p, s in subterms(a.term) if isinstance(s, Call) and s.cid == cid)
            z = Var(var_name(next_var_index(a.term)))
            self.make_let(a, [(z.name, at(a.term, pos))], replace_at(a.term, pos, z))
            return True
        g, s1, s2 = msg(a.term, b.term, keep="right")
        if isinstance(g, Var):
            for n in (b, a):
                if self.split_args(n):
                    return True
            return False
        if is_variable_renaming(s1):
            # b is an instance of a: abstract b so its body folds back to a
            self.make_let(b, sorted(s2.items()), g)
            return True
        g, s1, _ = msg(a.term, b.term, keep="left")
        self.make_let(a, sorted(s1.items()), g)
        return True

    def split_args(self, n: Node) -> bool:
        t = n.term
        if not isinstance(t, Call):
            return False
        k = next_var_index(t)
        binds, args = [], []
        for arg in t.args:
            if isinstance(arg, Var):
                args.append(arg)
            else:
                v = var_name(k)
                k += 1
                binds.append((v, arg))
                args.append(Var(v))
        if not binds:
            return False
        self.make_let(n, binds, Call(t.name, tuple(args), t.cid))
        return True

    def make_let(self, node: Node, binds: list[tuple[str, Term]], body: Term) -> None:
        self.kill(node)
        node.kind = "let"
        node.let_vars = tuple(v for v, _ in binds)
        node.redex_cid = None
        node.target, node.renaming = None, {}
        kids = [self.binding_node(node, t) for _, t in binds]
        kids.append(self.new(body, node))
        node.children = kids
        # the body goes last onto the stack so it is processed first:
        # a whistle there may discard the whole let
        for k in reversed(kids[:-1]):
            self.work.append(k.children[-1] if k.kind == "let" else k)
        self.work.append(kids[-1])

    def binding_node(self, parent: Node, t: Term) -> Node:
        """A call binding gets its call-free constructor arguments abstracted into an inner let."""
        n = self.new(t, parent)
        if not isinstance(t, Call):
            return n
        k = next_var_index(t)
        binds, args = [], []
        for arg in t.args:
            if not isinstance(arg, Var) and not has_call(arg):
                v = var_name(k)
                k += 1
                binds.append((v, arg))
                args.append(Var(v))
            else:
                args.append(arg)
        if binds:
            n.kind = "let"
            n.let_vars = tuple(v for v, _ in binds)
            n.children = [self.new(x, n) for _, x in binds]
            for c in n.children:
                c.kind = "leaf"
            n.children.append(self.new(Call(t.name, tuple(args), t.cid), n))
        return n


def unfold(program: Program, term: Term, relation: str = "turchin", max_nodes: int = 1000) -> Graph:
    return _Builder(program, relation, max_nodes).run(term)


# residualization -----------------------------------------------------------------------


def _params(t: Term) -> tuple[str, ...]:
    return tuple(variables(t))


def _has_narrowing(n: Node) -> bool:
    return n.kind == "drive" and any(c.edge for c in n.children)


def function_nodes(graph: Graph) -> list[Node]:
    """Nodes that become residual functions, in discovery order."""
    if graph.exhausted or any(n.kind in ("frontier", "open") for n in graph.nodes()):
        raise ScpError("graph is not closed (node budget exhausted)")
    chosen: set[int] = {graph.root.id}
    for n in graph.nodes():
        if n.kind == "fold":
            chosen.add(n.target.id)
        if n.kind == "let":
            for c in n.children:
                if c.kind == "drive":
                    chosen.add(c.id)

    def mark(n: Node, ctx: str) -> None:
        if n.id in chosen:
            ctx = "rule"
        elif ctx == "expr" and _has_narrowing(n):
            chosen.add(n.id)
            ctx = "rule"
        if n.kind == "let":
            for c in n.children:
                mark(c, "expr")
        elif n.kind == "cons":
            busy = [c for c in n.children if has_call(c.term)]
            for c in n.children:
                mark(c, "expr" if len(busy) > 1 else ctx)
        else:
            for c in n.children:
                mark(c, ctx)

    mark(graph.root, "rule")
    return [n for n in graph.nodes() if n.id in chosen]


@dataclass
class Residual:
    program: Program
    entry: str
    params: tuple[str, ...]
    names: dict[int, str]

    def text(self) -> str:
        return format_program(self.program)


def residualize(graph: Graph) -> Residual:
    funcs = function_nodes(graph)
    counters: dict[str, itertools.count] = {}
    names: dict[int, str] = {}
    for n in funcs:
        head = n.term.name
        counters.setdefault(head, itertools.count(1))
        names[n.id] = f"{head}{next(counters[head])}"
    params = {n.id: _params(n.term) for n in funcs}

    def call_of(n: Node) -> Term:
        return Call(names[n.id], tuple(Var(p) for p in params[n.id]))

    def gen(n: Node, sigma: dict, owner: Node) -> list[tuple[dict, Term]]:
        if n.id in names and n is not owner:
            return [(sigma, call_of(n))]
        if n.kind == "drive":
            out = []
            for c in n.children:
                out.extend(gen(c, compose(sigma, c.edge) if c.edge else sigma, owner))
            return out
        if n.kind == "cons":
            acc: list[tuple[dict, list[Term]]] = [(sigma, [])]
            for c in n.children:
                acc = [(s2, es + [e]) for s, es in acc for s2, e in gen(c, s, owner)]
            return [(s, Con(n.term.name, tuple(es))) for s, es in acc]
        if n.kind == "let":
            parts = []
            for c in n.children:
                res = gen(c, {}, owner)
                if len(res) != 1 or res[0][0]:
                    raise ScpError("let component branches outside a function")
                parts.append(res[0][1])
            body = substitute(parts[-1], dict(zip(n.let_vars, parts[:-1])))
            return [(sigma, body)]
        if n.kind == "fold":
            tgt = n.target
            inv = {v: Var(n.renaming[v]) for v in params[tgt.id]}
            return [(sigma, Call(names[tgt.id], tuple(inv[p] for p in params[tgt.id])))]
        if n.kind == "leaf":
            return [(sigma, n.term)]
        raise ScpError(f"cannot residualize a {n.kind} node: {show(n.term)}")

    rules: list[Rule] = []
    for f in funcs:
        for sigma, expr in gen(f, {}, f):
            pats = tuple(substitute(Var(p), sigma) for p in params[f.id])
            rules.append(Rule(names[f.id], pats, substitute(expr, sigma)))
    prog = Program(tuple(_tidy(r) for r in rules))
    root = graph.root
    return Residual(prog, names[root.id], params[root.id], names)


def _tidy(r: Rule) -> Rule:
    """Rename variables to ``x, x1, x2, ...`` in order of appearance in the head."""
    seen: list[str] = []
    for p in r.patterns:
        for v in variables(p):
            if v not in seen:
                seen.append(v)
    for v in variables(r.body):
        if v not in seen:
            seen.append(v)
    ren = {v: Var(var_name(k)) for k, v in enumerate(seen)}
    return Rule(r.name, tuple(substitute(p, ren) for p in r.patterns), substitute(r.body, ren))


def format_program(p: Program) -> str:
    lines, prev = [], None
    for r in p.rules:
        if prev is not None and r.name != prev:
            lines.append("")
        lines.append(f"{r};")
        prev = r.name
    return "\n".join(lines) + "\n"


def supercompile(program: Program, term: Term, relation: str = "turchin",
                 max_nodes: int = 1000) -> tuple[Graph, Residual]:
    g = unfold(program, term, relation, max_nodes)
    return g, residualize(g)


# presentation --------------------------------------------------------------------------


def _node_text(program: Program, n: Node) -> str:
    if n.kind == "let":
        return f"let {', '.join(n.let_vars)}"
    if not has_call(n.term):
        return show(n.term)
    stack = plain_str(plain(stack_word(program, n.term).visible))
    return f"{show(n.term)}  [{stack}]"


def _edge_text(edge: dict) -> str:
    return ", ".join(f"{k}={show(v)}" for k, v in edge.items())


def tree_text(program: Program, graph: Graph) -> str:
    lines = []

    def go(n: Node, depth: int) -> None:
        pad = "  " * depth
        edge = f"{_edge_text(n.edge)} -> " if n.edge else ""
        extra = ""
        if n.kind == "fold":
            extra = f"  ~> #{n.target.id}"
        elif n.kind in ("stuck", "frontier"):
            extra = f"  ({n.kind})"
        lines.append(f"{pad}#{n.id} {edge}{_node_text(program, n)}{extra}")
        for c in n.children:
            go(c, depth + 1)

    go(graph.root, 0)
    return "\n".join(lines) + "\n"


def dot_text(program: Program, graph: Graph) -> str:
    def q(s: str) -> str:
        return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'

    out = ["digraph process {", "  node [shape=box, fontname=monospace];"]
    for n in graph.nodes():
        shape = ", style=dashed" if n.kind in ("frontier", "stuck") else ""
        out.append(f"  n{n.id} [label={q(_node_text(program, n))}{shape}];")
    for n in graph.nodes():
        for c in n.children:
            out.append(f"  n{n.id} -> n{c.id} [label={q(_edge_text(c.edge))}];")
        if n.kind == "fold":
            out.append(f"  n{n.id} -> n{n.target.id} [style=dashed];")
    out.append("}")
    return "\n".join(out) + "\n"
