"""Multi-layer prefix grammars over generalized layered words.

A rule rewrites a visible prefix (its head) and may pop the letters of one
child label of the last head label out of the invisible layer.  Afterwards a
chain of layer functions is applied to the invisible layer, relative to that
same head label.

Replacement letters carry a *role*: a head label variable such as ``h``, or a
fresh descendant such as ``h.n`` (``h.n.m`` is a fresh child of ``h.n``).  One
role name denotes one label within a single rule application.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .labels import LabelId, LabelRegistry
from .layerfns import LayerFn, LayerFnError, apply_chain, parse_chain
from .words import (
    GWord,
    LayeredWord,
    Letter,
    coproject,
    format_gword,
    labels_of,
    parse_gword,
    plain,
    project,
)


class MlpgError(ValueError):
    pass


@dataclass(frozen=True)
class HeadItem:
    letter: str          # a concrete letter, or a letter variable if not in the alphabet
    label_var: str


@dataclass(frozen=True)
class RepItem:
    letters: tuple[str, ...]
    role: str            # "h" or "h.n" / "h.n.m" for fresh descendants

    @property
    def base(self) -> str:
        return self.role.split(".", 1)[0]

    @property
    def fresh_path(self) -> tuple[str, ...]:
        return tuple(self.role.split(".")[1:])


@dataclass(frozen=True)
class MlpgRule:
    name: str
    head: tuple[HeadItem, ...]
    replacement: tuple[RepItem, ...] = ()
    chain: tuple[LayerFn, ...] = ()
    pop: str | None = None       # None, "oldest", "any" or "child#k"
    halting: bool = False
    anchored: bool = False       # head must be the whole visible layer

    def __post_init__(self):
        if not self.head:
            raise MlpgError(f"rule {self.name}: empty head")
        if self.pop is not None and not re.fullmatch(r"oldest|any|child#[1-9]\d*", self.pop):
            raise MlpgError(f"rule {self.name}: unknown pop selector {self.pop!r}")
        bound = {h.label_var for h in self.head}
        for item in self.replacement:
            if item.base not in bound:
                raise MlpgError(f"rule {self.name}: role {item.role} uses an unbound label variable")
            if self.pop is not None and item.fresh_path:
                raise MlpgError(f"rule {self.name}: pop rules may only relabel with head labels")
        # along the replacement a fresh role may only be followed by itself or an ancestor role
        for a, b in zip(self.replacement, self.replacement[1:]):
            if a.base == b.base and a.fresh_path[:len(b.fresh_path)] != b.fresh_path:
                raise MlpgError(
                    f"rule {self.name}: role {b.role} after {a.role} breaks the label order of the visible layer"
                )

    @property
    def last_label_var(self) -> str:
        return self.head[-1].label_var

    @property
    def is_pop(self) -> bool:
        return self.pop is not None


@dataclass(frozen=True)
class Mlpg:
    alphabet: frozenset[str]
    rules: tuple[MlpgRule, ...]
    init: str                    # a G-word in text form, e.g. "[a@0] $ [b@0.0][b@0.0]"
    k1: int | None = None
    k2: int | None = None

    def __post_init__(self):
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise MlpgError("duplicate rule names")
        for r in self.rules:
            if self.k1 is not None and len(r.chain) > self.k1:
                raise MlpgError(f"rule {r.name}: chain longer than K1={self.k1}")
            if self.k2 is not None and any(len(f.payload) > self.k2 for f in r.chain):
                raise MlpgError(f"rule {r.name}: payload longer than K2={self.k2}")
            for f in r.chain:
                unknown = set(f.payload) - self.alphabet
                if unknown:
                    raise MlpgError(f"rule {r.name}: payload letters {sorted(unknown)} not in alphabet")

    @property
    def max_head(self) -> int:
        return max((len(r.head) for r in self.rules), default=1)

    def rule(self, name: str) -> MlpgRule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


def is_alphabetic_mlpg(grammar: Mlpg) -> bool:
    return all(len(r.head) == 1 for r in grammar.rules)


def check_visible_order(reg: LabelRegistry, word: LayeredWord) -> bool:
    """Labels along the visible layer never increase: each is equal to or an ancestor of the previous."""
    return all(reg.preceq(b.label, a.label) for a, b in zip(word.letters, word.letters[1:]))


# sessions --------------------------------------------------------------------


@dataclass(frozen=True)
class Event:
    rule: str
    consumed: tuple[int, ...]
    head_len: int
    popped: tuple[int, ...]
    produced: tuple[int, ...]


@dataclass
class TraceSession:
    grammar: Mlpg
    reg: LabelRegistry
    words: list[GWord]
    events: list[Event] = field(default_factory=list)
    lineage: dict[int, tuple[int, ...]] = field(default_factory=dict)
    halted: bool = False
    output: tuple[str, ...] | None = None

    @classmethod
    def start(cls, grammar: Mlpg, reg: LabelRegistry | None = None) -> TraceSession:
        reg = reg if reg is not None else LabelRegistry()
        gw = parse_gword(reg, grammar.init)
        if not check_visible_order(reg, gw.visible):
            raise MlpgError("initial visible layer is not ordered by labels")
        return cls(grammar, reg, [gw])

    def last(self) -> GWord:
        return self.words[-1]

    def fork(self) -> TraceSession:
        """Shallow branch sharing the label registry; registries only grow, so this is safe."""
        return TraceSession(self.grammar, self.reg, list(self.words), list(self.events),
                            dict(self.lineage), self.halted, self.output)

    def format(self, k: int = -1) -> str:
        return format_gword(self.reg, self.words[k])

    def descendants(self, uid: int) -> set[int]:
        """Reflexive closure of the lineage relation downwards from ``uid``."""
        kids: dict[int, list[int]] = {}
        for child, parents in self.lineage.items():
            for p in parents:
                kids.setdefault(p, []).append(child)
        out, todo = {uid}, [uid]
        while todo:
            for c in kids.get(todo.pop(), ()):
                if c not in out:
                    out.add(c)
                    todo.append(c)
        return out

    def stack_trace(self):
        from .whistles import StackTrace
        return StackTrace(list(self.words), [frozenset(e.consumed) for e in self.events],
                          self.grammar.max_head)


@dataclass(frozen=True)
class Match:
    rule: MlpgRule
    letters: dict
    labels: dict
    pop_label: LabelId | None = None


def match_rule(reg: LabelRegistry, gw: GWord, rule: MlpgRule, alphabet: frozenset[str],
               branch_pops: bool = False) -> list[Match]:
    vis = gw.visible.letters
    n = len(rule.head)
    if len(vis) < n or (rule.anchored and len(vis) != n):
        return []
    letters: dict[str, str] = {}
    labels: dict[str, LabelId] = {}
    for item, occ in zip(rule.head, vis):
        if item.letter in alphabet:
            if occ.letter != item.letter:
                return []
        elif letters.setdefault(item.letter, occ.letter) != occ.letter:
            return []
        if labels.setdefault(item.label_var, occ.label) != occ.label:
            return []
    if not rule.is_pop:
        return [Match(rule, letters, labels)]
    s_i = labels[rule.last_label_var]
    kids = sorted(reg.child_of(s_i, labels_of(gw.invisible) | {s_i}))
    if not kids:
        return []
    if rule.pop.startswith("child#"):
        k = int(rule.pop[6:])
        return [Match(rule, letters, labels, kids[k - 1])] if k <= len(kids) else []
    if branch_pops:
        return [Match(rule, letters, labels, s) for s in kids]
    return [Match(rule, letters, labels, kids[0])]


def mlpg_step(session: TraceSession, m: Match) -> GWord:
    """Apply a match to the last word of ``session``; raises ``LayerFnError`` if the chain fails."""
    if session.halted:
        raise MlpgError("session already halted")
    g = session.grammar
    reg = session.reg
    gw = session.last()
    rule = m.rule
    n = len(rule.head)
    head, theta = gw.visible.letters[:n], gw.visible.letters[n:]
    s_i = m.labels[rule.last_label_var]

    if m.pop_label is not None:
        popped = project(gw.invisible, m.pop_label)
        psi = coproject(gw.invisible, m.pop_label)
    else:
        popped, psi = LayeredWord(), gw.invisible

    invisible = apply_chain(reg, psi, rule.chain, s_i, g.k1, g.k2)
    chain_new = tuple(x.uid for x in invisible.letters[len(psi):])

    fresh: dict[str, LabelId] = {}

    def resolve(role: str) -> LabelId:
        if role in fresh:
            return fresh[role]
        base, _, rest = role.rpartition(".")
        if not base:
            return m.labels[role]
        lab = reg.new_child(resolve(base))
        fresh[role] = lab
        return lab

    phi: list[Letter] = []
    for item in rule.replacement:
        lab = resolve(item.role)
        for a in item.letters:
            a = m.letters.get(a, a)
            phi.append(Letter(a, lab, reg.fresh_uid()))

    visible = LayeredWord(popped.letters + tuple(phi) + theta)
    new = GWord(visible, invisible)
    consumed = tuple(x.uid for x in head)
    produced = tuple(x.uid for x in phi) + chain_new
    for u in produced:
        session.lineage[u] = consumed
    session.words.append(new)
    session.events.append(Event(rule.name, consumed, n, popped.uids(), produced))
    if rule.halting:
        session.halted = True
        session.output = plain(visible)
    return new


def try_step(session: TraceSession, m: Match) -> bool:
    try:
        mlpg_step(session, m)
        return True
    except LayerFnError:
        return False


def matches(session: TraceSession, branch_pops: bool = False) -> list[Match]:
    g = session.grammar
    out: list[Match] = []
    for r in g.rules:
        out.extend(match_rule(session.reg, session.last(), r, g.alphabet, branch_pops))
    return out


def run_ordered(grammar: Mlpg, max_steps: int, max_size: int | None = None) -> TraceSession:
    """Deterministic trace: first rule (in grammar order) that matches and whose chain succeeds.

    With ``max_size`` the run also stops once a word holds more letters than that.
    """
    s = TraceSession.start(grammar)
    while len(s.events) < max_steps and not s.halted:
        if max_size is not None:
            w = s.words[-1]
            if len(w.visible) + len(w.invisible) > max_size:
                break
        if not any(try_step(s, m) for m in matches(s)):
            break
    return s


def _explore(frontier: deque, max_steps: int, max_traces: int) -> list[TraceSession]:
    done: list[TraceSession] = []
    while frontier:
        s = frontier.popleft()
        if s.halted or len(s.events) >= max_steps:
            done.append(s)
            continue
        moved = False
        for m in matches(s, branch_pops=True):
            t = s.fork()
            if try_step(t, m):
                moved = True
                frontier.append(t)
        if not moved:
            done.append(s)
        if len(done) + len(frontier) > max_traces:
            raise MlpgError(f"more than {max_traces} traces")
    return done


def _explore_one(args) -> list[TraceSession]:
    session, max_steps, max_traces = args
    return _explore(deque([session]), max_steps, max_traces)


def run(grammar: Mlpg, policy: str = "ordered", max_steps: int = 100,
        max_traces: int = 10_000, jobs: int = 1) -> list[TraceSession]:
    """``ordered`` gives one trace; ``all`` gives every trace maximal within ``max_steps``.

    With ``jobs > 1`` the ``all`` tree is cut at the first level wide enough
    and the subtrees are explored in worker processes.  Each subtree owns a
    copy of the label registry, so printed label paths can differ from a
    single-process run; the traces themselves are the same.
    """
    if policy == "ordered":
        return [run_ordered(grammar, max_steps)]
    if policy != "all":
        raise MlpgError(f"unknown policy {policy!r}")
    root = TraceSession.start(grammar)
    if jobs <= 1:
        return _explore(deque([root]), max_steps, max_traces)
    # widen breadth-first until there is enough work to share
    done: list[TraceSession] = []
    frontier = [root]
    while frontier and len(frontier) < jobs:
        nxt = []
        for s in frontier:
            if s.halted or len(s.events) >= max_steps:
                done.append(s)
                continue
            kids = []
            for m in matches(s, branch_pops=True):
                t = s.fork()
                if try_step(t, m):
                    kids.append(t)
            if kids:
                nxt.extend(kids)
            else:
                done.append(s)
        frontier = nxt
    if frontier:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_explore_one, [(s, max_steps, max_traces) for s in frontier]):
                done.extend(part)
    if len(done) > max_traces:
        raise MlpgError(f"more than {max_traces} traces")
    return done


def canonical_key(reg: LabelRegistry, gw: GWord) -> tuple:
    """State identity up to renaming of labels: letters plus the order among present labels."""
    present = sorted(labels_of(gw.visible) | labels_of(gw.invisible))
    idx = {s: k for k, s in enumerate(present)}
    up = tuple(
        next((idx[a] for a in reg.ancestors(s) if a in idx), -1) for s in present
    )
    return (
        tuple((x.letter, idx[x.label]) for x in gw.visible.letters),
        tuple((x.letter, idx[x.label]) for x in gw.invisible.letters),
        up,
    )


@dataclass
class LanguageResult:
    words: set[tuple[str, ...]]
    expansions: int
    exhausted: bool              # True if the state budget ran out before the search finished


def enumerate_language(grammar: Mlpg, max_word_len: int, max_steps: int = 200,
                       max_states: int = 100_000,
                       prune: Callable[[GWord], bool] | None = None) -> LanguageResult:
    """Breadth-first search over all traces; collects halting outputs of length ``<= max_word_len``.

    ``max_steps`` bounds trace depth, ``max_states`` bounds the number of
    expanded states.  States are deduplicated up to label renaming.
    """
    root = TraceSession.start(grammar)
    reg = root.reg
    seen = {canonical_key(reg, root.last())}
    frontier = deque([(root.last(), 0)])
    words: set[tuple[str, ...]] = set()
    expansions = 0
    while frontier:
        if expansions >= max_states:
            return LanguageResult(words, expansions, True)
        gw, depth = frontier.popleft()
        expansions += 1
        if depth >= max_steps:
            continue
        probe = TraceSession(grammar, reg, [gw])
        for m in matches(probe, branch_pops=True):
            t = TraceSession(grammar, reg, [gw])
            if not try_step(t, m):
                continue
            new = t.last()
            if t.halted:
                if len(t.output) <= max_word_len:
                    words.add(t.output)
                continue
            if prune is not None and prune(new):
                continue
            key = canonical_key(reg, new)
            if key not in seen:
                seen.add(key)
                frontier.append((new, depth + 1))
    return LanguageResult(words, expansions, False)


# text format -------------------------------------------------------------------

_RULE = re.compile(
    r"^rule\s+(?P<name>\S+?)\s*(?P<mods>(?:\s+(?:halt|pop\([^)]*\)))*)\s*:\s*"
    r"head\s+(?P<head>.*?)\s*=>\s*(?P<rhs>.*?)\s*(?:layer:\s*(?P<layer>.*))?$"
)
_COMMENT = re.compile(r"(^|\s)#.*$")
_HEAD_ITEM = re.compile(r"([^\s@\[\]$]+)@(\w+)")
_REP_ITEM = re.compile(r"\[([^\[\]@]+)@([\w.]+)\]")


def _split_rep_letters(text: str, alphabet: frozenset[str], variables: set[str]) -> tuple[str, ...]:
    text = text.strip()
    if "," in text or " " in text:
        return tuple(t for t in re.split(r"[\s,]+", text) if t)
    if text in alphabet or text in variables:
        return (text,)
    return tuple(text)


def parse_mlpg(text: str) -> Mlpg:
    """Parse the grammar file format::

        alphabet: a b
        init: [a@0] $ [b@0.0][b@0.0]
        rule R1 pop(oldest): head a@h => pop ++ [a@h] layer: id
        rule R2 halt pop(oldest): head a@h $ => pop layer: id
        rule R3: head b@h => layer: app(h.child#1, "bb")
    """
    alphabet: frozenset[str] | None = None
    init = None
    k1 = k2 = None
    raw_rules: list[tuple[int, re.Match]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _COMMENT.sub("", raw).strip()
        if not line:
            continue
        if line.startswith("alphabet:"):
            alphabet = frozenset(line[9:].split())
        elif line.startswith("init:"):
            init = line[5:].strip()
        elif line.startswith("k1:"):
            k1 = int(line[3:])
        elif line.startswith("k2:"):
            k2 = int(line[3:])
        elif line.startswith("rule"):
            m = _RULE.match(line)
            if not m:
                raise MlpgError(f"line {lineno}: cannot parse rule {raw.strip()!r}")
            raw_rules.append((lineno, m))
        else:
            raise MlpgError(f"line {lineno}: unexpected line {raw.strip()!r}")
    if alphabet is None:
        raise MlpgError("missing 'alphabet:' line")
    if init is None:
        raise MlpgError("missing 'init:' line")
    rules = []
    for lineno, m in raw_rules:
        try:
            rules.append(_build_rule(m, alphabet))
        except (MlpgError, LayerFnError) as e:
            raise MlpgError(f"line {lineno}: {e}") from None
    return Mlpg(alphabet, tuple(rules), init, k1, k2)


def _build_rule(m: re.Match, alphabet: frozenset[str]) -> MlpgRule:
    mods = m.group("mods").split()
    halting = "halt" in mods
    pop = None
    for mod in mods:
        if mod.startswith("pop("):
            pop = mod[4:-1].strip() or "oldest"
    head_text = m.group("head").strip()
    anchored = head_text.endswith("$")
    if anchored:
        head_text = head_text[:-1].strip()
    items = _HEAD_ITEM.findall(head_text)
    if not items or _HEAD_ITEM.sub("", head_text).strip():
        raise MlpgError(f"cannot parse head {head_text!r}")
    head = tuple(HeadItem(a, h) for a, h in items)
    variables = {h.letter for h in head if h.letter not in alphabet}

    rhs = m.group("rhs").strip()
    has_pop = False
    rep: list[RepItem] = []
    rest = rhs
    if rest.startswith("pop"):
        has_pop = True
        rest = rest[3:].strip()
        if rest.startswith("++"):
            rest = rest[2:].strip()
    for lt, role in _REP_ITEM.findall(rest):
        rep.append(RepItem(_split_rep_letters(lt, alphabet, variables), role))
    leftover = _REP_ITEM.sub("", rest).replace("++", "").strip()
    if leftover:
        raise MlpgError(f"cannot parse replacement {rhs!r}")
    if has_pop != (pop is not None):
        raise MlpgError("a pop rule needs both the pop(...) modifier and 'pop' in its replacement")
    for item in rep:
        bad = [a for a in item.letters if a not in alphabet and a not in variables]
        if bad:
            raise MlpgError(f"unknown letters {bad}")
    chain = parse_chain(m.group("layer") or "id", alphabet)
    return MlpgRule(m.group("name"), head, tuple(rep), chain, pop, halting, anchored)


def _fmt_letters(letters: Iterable[str]) -> str:
    letters = list(letters)
    return "".join(letters) if all(len(a) == 1 for a in letters) else ",".join(letters)


def format_rule(rule: MlpgRule) -> str:
    mods = (" halt" if rule.halting else "") + (f" pop({rule.pop})" if rule.pop else "")
    head = " ".join(f"{h.letter}@{h.label_var}" for h in rule.head) + (" $" if rule.anchored else "")
    parts = (["pop"] if rule.pop else []) + [f"[{_fmt_letters(r.letters)}@{r.role}]" for r in rule.replacement]
    chain = "; ".join(str(f) for f in rule.chain) or "id"
    rhs = " ++ ".join(parts)
    return f"rule {rule.name}{mods}: head {head} => {rhs + ' ' if rhs else ''}layer: {chain}"


def format_mlpg(grammar: Mlpg) -> str:
    lines = [f"alphabet: {' '.join(sorted(grammar.alphabet))}"]
    if grammar.k1 is not None:
        lines.append(f"k1: {grammar.k1}")
    if grammar.k2 is not None:
        lines.append(f"k2: {grammar.k2}")
    lines.append(f"init: {grammar.init}")
    lines.extend(format_rule(r) for r in grammar.rules)
    return "\n".join(lines) + "\n"


# invariant checks ------------------------------------------------------------------


def _ancestor_in(session: TraceSession, uid: int, targets: set[int], memo: dict[int, int | None]) -> int | None:
    """The member of ``targets`` that ``uid`` descends from (reflexively), following lineage."""
    path = []
    u: int | None = uid
    found = None
    while u is not None:
        if u in memo:
            found = memo[u]
            break
        if u in targets:
            found = u
            break
        path.append(u)
        parents = session.lineage.get(u)
        u = parents[0] if parents and len(parents) == 1 else None
    for p in path:
        memo[p] = found
    return found


def order_violations(session: TraceSession) -> list[int]:
    """Word indices whose visible layer is not ordered by labels."""
    return [k for k, w in enumerate(session.words) if not check_visible_order(session.reg, w.visible)]


def separation_violations(session: TraceSession) -> list[tuple[int, int]]:
    """Pairs ``(k, m)``: word ``m`` shows derivatives of two incomparable invisible groups of word ``k``."""
    reg = session.reg
    out = []
    for k, w in enumerate(session.words):
        origin = {x.uid: x.label for x in w.invisible.letters}
        if len(set(origin.values())) < 2:
            continue
        memo: dict[int, int | None] = {}
        for m in range(k + 1, len(session.words)):
            labs = set()
            for x in session.words[m].visible.letters:
                a = _ancestor_in(session, x.uid, set(origin), memo)
                if a is not None:
                    labs.add(origin[a])
            labs = sorted(labs)
            if any(not reg.comparable(s, t) for i, s in enumerate(labs) for t in labs[i + 1:]):
                out.append((k, m))
    return out


def precedence_violations(session: TraceSession) -> list[tuple[int, int]]:
    """Pairs ``(k, m)``: in word ``m`` a derivative of a later letter of word ``k`` precedes one of an earlier letter."""
    out = []
    for k, w in enumerate(session.words):
        pos = {x.uid: i for i, x in enumerate(w.visible.letters)}
        memo: dict[int, int | None] = {}
        for m in range(k + 1, len(session.words)):
            seq = []
            for x in session.words[m].visible.letters:
                a = _ancestor_in(session, x.uid, set(pos), memo)
                if a is not None:
                    seq.append(pos[a])
            if any(b < a for a, b in zip(seq, seq[1:])):
                out.append((k, m))
    return out


# random grammars --------------------------------------------------------------------


def random_alphabetic_mlpg(rng, max_letters: int = 4, k1: int = 2, k2: int = 2,
                           pop_rate: float = 0.3, max_head: int = 1) -> Mlpg:
    """A random grammar; every letter has at least one rule.

    With ``max_head = 1`` (the default) the grammar is alphabetic.  Larger
    values add some rules whose head repeats one label, e.g. ``a@h b@h``.
    """
    letters = "abcd"[:rng.randint(1, max_letters)]
    rules: list[MlpgRule] = []
    count = itertools.count(1)
    for a in letters:
        for _ in range(rng.randint(1, 3)):
            head = [HeadItem(a, "h")]
            if max_head > 1 and rng.random() < 0.4:
                head += [HeadItem(rng.choice(letters), "h") for _ in range(rng.randint(1, max_head - 1))]
            is_pop = rng.random() < pop_rate
            rep: list[RepItem] = []
            n = rng.randint(0, 3)
            roles = sorted((rng.choice(["h", "h.n"]) if not is_pop else "h" for _ in range(n)),
                           key=lambda r: -len(r))
            for r in roles:
                rep.append(RepItem((rng.choice(letters),), r))
            chain = []
            for _ in range(rng.randint(0, k1)):
                kind = rng.choice(["app", "app", "ins", "del", "copy"])
                slot = rng.choice(["new", 1, 2]) if kind == "app" else rng.choice([1, 2])
                payload = tuple(rng.choice(letters) for _ in range(rng.randint(1, k2))) \
                    if kind in ("app", "ins") else ()
                chain.append(LayerFn(kind, slot, payload))
            rules.append(MlpgRule(f"R{next(count)}", tuple(head), tuple(rep), tuple(chain),
                                  "oldest" if is_pop else None))
    rng.shuffle(rules)
    vis = "".join(f"[{rng.choice(letters)}@0]" for _ in range(rng.randint(1, 3)))
    inv = "".join(f"[{rng.choice(letters)}@0.0]" for _ in range(rng.randint(0, 2)))
    return Mlpg(frozenset(letters), tuple(rules), f"{vis} $ {inv}".rstrip(), k1, k2)
