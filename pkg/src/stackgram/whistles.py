"""Termination whistles: Turchin pairs on stack traces, homeomorphic embedding on terms."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .lang import Call, Con, Term, Var, show
from .words import GWord, plain, plain_str


@dataclass
class StackTrace:
    """Words ``Γ_k $ Δ_k`` plus, for each step ``k -> k+1``, the occurrence ids it consumed.

    ``guard`` is the longest rule head ``N``: interior words must keep at
    least ``N`` letters in front of a stable suffix.
    """

    words: list[GWord]
    consumed: list[frozenset[int]]
    guard: int = 1

    def __post_init__(self):
        if len(self.consumed) != max(len(self.words) - 1, 0):
            raise ValueError("need exactly one consumed set per step")

    def visible_uids(self, k: int) -> tuple[int, ...]:
        return self.words[k].visible.uids()

    def visible_plain(self, k: int) -> tuple[str, ...]:
        return plain(self.words[k].visible)


@dataclass(frozen=True)
class Verdict:
    i: int
    j: int
    top: tuple[str, ...]
    mid: tuple[str, ...]
    context: tuple[str, ...]

    @property
    def ell(self) -> int:
        return len(self.context)

    def line(self, tag: str = "TURCHIN") -> str:
        return (f"{tag} i={self.i} j={self.j} top={plain_str(self.top)} "
                f"mid={plain_str(self.mid)} ctx={plain_str(self.context)}")


def _check_segment(trace: StackTrace, i: int, j: int) -> None:
    if not 0 <= i < j < len(trace.words):
        raise ValueError(f"invalid segment [{i}, {j}] for a trace of {len(trace.words)} words")


def _suffix(u: tuple[int, ...], ell: int) -> tuple[int, ...]:
    return u[len(u) - ell:] if ell else ()


def suffix_is_stable(trace: StackTrace, i: int, j: int, ell: int) -> bool:
    """The last ``ell`` visible occurrences of ``Γ_i`` stay, untouched and in place, through ``Γ_j``."""
    ui = trace.visible_uids(i)
    if ell > len(ui):
        return False
    theta = _suffix(ui, ell)
    for k in range(i, j + 1):
        uk = trace.visible_uids(k)
        if len(uk) < ell or _suffix(uk, ell) != theta:
            return False
        if k < j:
            if len(uk) - ell < trace.guard:
                return False
            if trace.consumed[k] & set(theta):
                return False
    return True


def stable_suffix_len(trace: StackTrace, i: int, j: int) -> int:
    """Largest stable ``ell`` over ``[i, j]``, or -1 if even the empty suffix fails the guard."""
    _check_segment(trace, i, j)
    for ell in range(len(trace.words[i].visible), -1, -1):
        if suffix_is_stable(trace, i, j, ell):
            return ell
    return -1


def turchin_pair_mlpg(trace: StackTrace, i: int, j: int) -> Verdict | None:
    """``Γ_i = ΦΘ`` and ``Γ_j = Φ'ΨΘ`` with ``Φ'`` plainly equal to ``Φ`` and ``Θ`` stable.

    The longest stable ``Θ`` is chosen.  Stability is downward closed, and a
    longer ``Θ`` only shortens the prefix that has to agree, so only the
    maximal candidate needs checking.
    """
    ell = stable_suffix_len(trace, i, j)
    if ell < 0:
        return None
    return _verdict_at(trace, i, j, ell)


def _verdict_at(trace: StackTrace, i: int, j: int, ell: int) -> Verdict | None:
    pi, pj = trace.visible_plain(i), trace.visible_plain(j)
    if len(pj) < len(pi):
        return None
    n = len(pi) - ell
    if pi[:n] != pj[:n]:
        return None
    return Verdict(i, j, pi[:n], pj[n:len(pj) - ell], pi[n:])


def turchin_pair_bruteforce(trace: StackTrace, i: int, j: int) -> Verdict | None:
    """Reference version: try every split of ``Γ_i`` and every matching split of ``Γ_j``."""
    _check_segment(trace, i, j)
    pi, pj = trace.visible_plain(i), trace.visible_plain(j)
    best = None
    for ell in range(len(pi) + 1):
        if not suffix_is_stable(trace, i, j, ell):
            continue
        n = len(pi) - ell
        for psi_len in range(len(pj) - ell - n + 1):
            if n + psi_len + ell == len(pj) and pj[:n] == pi[:n]:
                best = Verdict(i, j, pi[:n], pj[n:n + psi_len], pi[n:])
    return best


class TurchinScanner:
    """Incremental first-pair search over a growing trace.

    For every earlier index ``i`` it keeps the largest ``ell`` that is still
    stable up to the newest word, so each new word costs one pass over the
    earlier ones.
    """

    def __init__(self, guard: int = 1):
        self.guard = guard
        self.words: list[GWord] = []
        self.bound: list[int] = []

    def push(self, word: GWord, consumed: frozenset[int] | None = None) -> Verdict | None:
        j = len(self.words)
        if j:
            prev = self.words[-1].visible.uids()
            for i in range(j):
                b = self.bound[i]
                if b < 0:
                    continue
                ui = self.words[i].visible.uids()
                b = min(b, len(prev) - self.guard)
                if consumed:
                    c = 0
                    while c < b and ui[len(ui) - 1 - c] not in consumed:
                        c += 1
                    b = min(b, c)
                self.bound[i] = b
        self.words.append(word)
        self.bound.append(len(word.visible))
        uj = word.visible.uids()
        pj = plain(word.visible)
        hit = None
        for i in range(j):
            b = self.bound[i]
            if b < 0:
                continue
            ui = self.words[i].visible.uids()
            c = 0
            while c < b and c < len(uj) and ui[len(ui) - 1 - c] == uj[len(uj) - 1 - c]:
                c += 1
            self.bound[i] = c
            if hit is None:
                pi = plain(self.words[i].visible)
                n = len(pi) - c
                if len(pj) >= len(pi) and pi[:n] == pj[:n]:
                    hit = Verdict(i, j, pi[:n], pj[n:len(pj) - c], pi[n:])
        return hit


# homeomorphic embedding ------------------------------------------------------------


def _head(t: Term) -> tuple:
    if isinstance(t, Var):
        return ("var",)
    kind = "call" if isinstance(t, Call) else "con"
    return (kind, t.name, len(t.args))


@lru_cache(maxsize=200_000)
def hve(a: Term, b: Term) -> bool:
    """Homeomorphic embedding ``a ⊴ b``: variables embed in variables, then coupling or diving."""
    if isinstance(a, Var) and isinstance(b, Var):
        return True
    if isinstance(b, Var):
        return False
    if not isinstance(a, Var) and _head(a) == _head(b):
        if all(hve(x, y) for x, y in zip(a.args, b.args)):
            return True
    return any(hve(a, y) for y in b.args)


# combined search ------------------------------------------------------------------------


@dataclass(frozen=True)
class Pair:
    relation: str
    i: int
    j: int
    verdict: Verdict | None = None

    def line(self, configs: Sequence[Term] | None = None) -> str:
        if self.verdict is not None:
            text = self.verdict.line(self.relation.upper())
        else:
            text = f"{self.relation.upper()} i={self.i} j={self.j}"
        if configs is not None:
            text += f" left={show(configs[self.i])} right={show(configs[self.j])}"
        return text


RELATIONS = ("turchin", "hve", "composite")


def pair_at(relation: str, trace: StackTrace | None, configs: Sequence[Term] | None,
            i: int, j: int) -> Pair | None:
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    verdict = None
    if relation in ("turchin", "composite"):
        verdict = turchin_pair_mlpg(trace, i, j)
        if verdict is None:
            return None
    if relation in ("hve", "composite"):
        if configs is None:
            raise ValueError(f"relation {relation} needs configurations")
        if not hve(configs[i], configs[j]):
            return None
    return Pair(relation, i, j, verdict)


def first_pair_ending_at(relation: str, trace: StackTrace | None, configs: Sequence[Term] | None,
                         j: int) -> Pair | None:
    for i in range(j):
        p = pair_at(relation, trace, configs, i, j)
        if p is not None:
            return p
    return None


def find_first_pair(trace: StackTrace | None, relation: str = "turchin",
                    configs: Sequence[Term] | None = None, limit: int | None = None) -> Pair | None:
    """Scan ``j = 1, 2, ...`` and, for each, ``i = 0 .. j-1``; return the first pair found."""
    n = len(trace.words) if trace is not None else len(configs)
    if limit is not None:
        n = min(n, limit + 1)
    if relation == "turchin":
        scanner = TurchinScanner(trace.guard)
        for j in range(n):
            v = scanner.push(trace.words[j], trace.consumed[j - 1] if j else None)
            if v is not None:
                return Pair("turchin", v.i, v.j, v)
        return None
    for j in range(1, n):
        p = first_pair_ending_at(relation, trace, configs, j)
        if p is not None:
            return p
    return None


def greedy_chain(n: int, related) -> list[int]:
    """Indices ``0 = c_0 < c_1 < ...`` below ``n`` with ``related(c_a, c_b)`` for every ``a < b``.

    Each index is taken as soon as it is related to everything already chosen.
    """
    chain: list[int] = []
    for j in range(n):
        if all(related(c, j) for c in chain):
            chain.append(j)
    return chain


def path_trace(program, terms: Sequence[Term], redexes: Sequence[int]) -> StackTrace:
    """Stack trace of a driving path: a step consumes its redex and every call that disappears."""
    from .lang import cids, stack_word

    words = [stack_word(program, t) for t in terms]
    consumed = [
        frozenset({redexes[k]} | (cids(terms[k]) - cids(terms[k + 1])))
        for k in range(len(terms) - 1)
    ]
    return StackTrace(words, consumed, 1)
