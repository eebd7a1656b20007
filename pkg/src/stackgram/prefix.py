"""Plain prefix grammars: call-by-value stack models and their Turchin pairs."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

from .words import plain_str


class PrefixGrammarError(ValueError):
    pass


@dataclass(frozen=True)
class PrefixRule:
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]

    def __post_init__(self):
        if not self.lhs:
            raise PrefixGrammarError("rule left-hand side must be non-empty")

    def __str__(self) -> str:
        return f"{plain_str(self.lhs)}->{plain_str(self.rhs) or 'Λ'}"


@dataclass(frozen=True)
class PrefixGrammar:
    rules: tuple[PrefixRule, ...]
    init: tuple[str, ...]


# a letter occurrence is (letter, uid)
Occ = tuple[str, int]


@dataclass
class Step:
    rule: PrefixRule
    consumed: frozenset[int]
    produced: tuple[int, ...]


@dataclass
class PlainTrace:
    words: list[tuple[Occ, ...]]
    steps: list[Step] = field(default_factory=list)
    _uids: itertools.count = field(default_factory=itertools.count, repr=False)

    @classmethod
    def start(cls, init: tuple[str, ...]) -> PlainTrace:
        t = cls(words=[])
        t.words.append(tuple((a, next(t._uids)) for a in init))
        return t

    def plain(self, k: int) -> tuple[str, ...]:
        return tuple(a for a, _ in self.words[k])

    def last(self) -> tuple[Occ, ...]:
        return self.words[-1]


def pg_step(word: tuple[Occ, ...], rule: PrefixRule, uids) -> tuple[tuple[Occ, ...], Step]:
    n = len(rule.lhs)
    if tuple(a for a, _ in word[:n]) != rule.lhs:
        raise PrefixGrammarError(f"rule {rule} does not apply: {plain_str([a for a, _ in word])}")
    fresh = tuple((a, next(uids)) for a in rule.rhs)
    step = Step(rule, frozenset(u for _, u in word[:n]), tuple(u for _, u in fresh))
    return fresh + word[n:], step


def applicable(word: tuple[Occ, ...], rule: PrefixRule) -> bool:
    n = len(rule.lhs)
    return len(word) >= n and tuple(a for a, _ in word[:n]) == rule.lhs


def extend(trace: PlainTrace, rule: PrefixRule) -> None:
    word, step = pg_step(trace.last(), rule, trace._uids)
    trace.words.append(word)
    trace.steps.append(step)


def run_ordered(grammar: PrefixGrammar, max_words: int) -> PlainTrace:
    """Deterministic trace: always the first applicable rule in grammar order."""
    trace = PlainTrace.start(grammar.init)
    while len(trace.words) < max_words:
        rule = next((r for r in grammar.rules if applicable(trace.last(), r)), None)
        if rule is None:
            break
        extend(trace, rule)
    return trace


def run_all(grammar: PrefixGrammar, depth: int) -> list[PlainTrace]:
    """Every trace of at most ``depth`` steps that is maximal within the bound."""
    done: list[PlainTrace] = []
    frontier = [(PlainTrace.start(grammar.init), 0)]
    while frontier:
        trace, d = frontier.pop(0)
        rules = [r for r in grammar.rules if applicable(trace.last(), r)]
        if d == depth or not rules:
            done.append(trace)
            continue
        for r in rules:
            t = PlainTrace(list(trace.words), list(trace.steps))
            t._uids = itertools.count(1 + max((u for w in trace.words for _, u in w), default=-1)
                                      + sum(len(s.produced) for s in trace.steps))
            extend(t, r)
            frontier.append((t, d + 1))
    return done


def is_alphabetic_pg(grammar: PrefixGrammar) -> bool:
    return all(len(r.lhs) == 1 for r in grammar.rules)


def changed_in_segment(trace: PlainTrace, uid: int, i: int, j: int) -> bool:
    if not 0 <= i < j < len(trace.words):
        raise PrefixGrammarError(f"invalid segment [{i}, {j}]")
    return any(uid in trace.steps[k].consumed for k in range(i, j))


@dataclass(frozen=True)
class PlainVerdict:
    i: int
    j: int
    top: tuple[str, ...]
    mid: tuple[str, ...]
    context: tuple[str, ...]


def turchin_pair_plain(trace: PlainTrace, i: int, j: int) -> PlainVerdict | None:
    """Split ``Γ_i = ΦΘ``, ``Γ_j = ΦΨΘ`` with ``Θ`` untouched over ``[i, j]``; longest ``Θ`` wins."""
    if not 0 <= i < j < len(trace.words):
        raise PrefixGrammarError(f"invalid segment [{i}, {j}]")
    wi, wj = trace.words[i], trace.words[j]
    touched = set().union(*(trace.steps[k].consumed for k in range(i, j)))
    stable = 0
    for _, u in reversed(wi):
        if u in touched:
            break
        stable += 1
    pi, pj = trace.plain(i), trace.plain(j)
    for ell in range(stable, -1, -1):
        n_top = len(wi) - ell
        if len(wj) < len(wi):
            continue
        if ell and tuple(u for _, u in wj[len(wj) - ell:]) != tuple(u for _, u in wi[n_top:]):
            continue
        if pj[:n_top] == pi[:n_top]:
            return PlainVerdict(i, j, pi[:n_top], pj[n_top:len(wj) - ell], pi[n_top:])
    return None


# text format ----------------------------------------------------------------

_RULE = re.compile(r"^\s*(.+?)\s*->\s*(.*?)\s*;?\s*$")


def _tokens(text: str) -> tuple[str, ...]:
    return tuple(text.split())


def parse_prefix_grammar(text: str) -> PrefixGrammar:
    """One rule per line (``f -> g f;``), plus ``init: h f``; ``#`` starts a comment."""
    rules: list[PrefixRule] = []
    init = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("init:"):
            init = _tokens(line[5:])
            continue
        m = _RULE.match(line)
        if not m:
            raise PrefixGrammarError(f"line {lineno}: cannot parse {raw!r}")
        lhs = _tokens(m.group(1))
        if not lhs:
            raise PrefixGrammarError(f"line {lineno}: empty left-hand side")
        rules.append(PrefixRule(lhs, _tokens(m.group(2).rstrip(";"))))
    if init is None:
        raise PrefixGrammarError("missing 'init:' line")
    return PrefixGrammar(tuple(rules), init)
