"""Layered words: sequences of (letter, label) occurrences.

Each occurrence carries a ``uid`` so that "the same occurrence" can be followed
through a trace even when it moves between the visible and invisible layers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .labels import LabelId, LabelRegistry, LabelError


@dataclass(frozen=True)
class Letter:
    letter: str
    label: LabelId
    uid: int


@dataclass(frozen=True)
class LayeredWord:
    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[Letter]:
        return iter(self.letters)

    def __add__(self, other: LayeredWord) -> LayeredWord:
        return LayeredWord(self.letters + other.letters)

    def __bool__(self) -> bool:
        return bool(self.letters)

    def at(self, i: int) -> Letter:
        """1-based access, ``word.at(1)`` is the first pair."""
        if not 1 <= i <= len(self.letters):
            raise IndexError(i)
        return self.letters[i - 1]

    def uids(self) -> tuple[int, ...]:
        return tuple(x.uid for x in self.letters)

    @classmethod
    def of(cls, letters: Iterable[Letter]) -> LayeredWord:
        return cls(tuple(letters))


EMPTY = LayeredWord()


@dataclass(frozen=True)
class GWord:
    visible: LayeredWord = EMPTY
    invisible: LayeredWord = EMPTY


def project(word: LayeredWord, s: LabelId) -> LayeredWord:
    return LayeredWord(tuple(x for x in word.letters if x.label == s))


def coproject(word: LayeredWord, s: LabelId) -> LayeredWord:
    return LayeredWord(tuple(x for x in word.letters if x.label != s))


def plain(word: LayeredWord) -> tuple[str, ...]:
    return tuple(x.letter for x in word.letters)


def plain_str(letters: Sequence[str]) -> str:
    if all(len(a) == 1 for a in letters):
        return "".join(letters)
    return " ".join(letters)


def labels_of(word: LayeredWord) -> set[LabelId]:
    return {x.label for x in word.letters}


def make_word(reg: LabelRegistry, letters: str | Sequence[str], label: LabelId) -> LayeredWord:
    """Fresh occurrences of ``letters``, all under ``label``."""
    return LayeredWord(tuple(Letter(a, label, reg.fresh_uid()) for a in letters))


def tree_view(reg: LabelRegistry, word: LayeredWord) -> str:
    """Render letters grouped by label, nested along the label order.

    A label is printed under its nearest ancestor that also occurs in the word.
    Only the order of letters sharing a label affects the result.
    """
    present = labels_of(word)
    for s in present:
        if s not in reg:
            raise LabelError(f"label {s} is not in the registry")
    groups = {s: plain_str(plain(project(word, s))) for s in present}
    parent_in: dict[LabelId, LabelId | None] = {}
    for s in present:
        parent_in[s] = next((a for a in reg.ancestors(s) if a in present), None)
    kids: dict[LabelId | None, list[LabelId]] = {}
    for s in sorted(present):
        kids.setdefault(parent_in[s], []).append(s)
    lines: list[str] = []

    def walk(s: LabelId, depth: int) -> None:
        lines.append("  " * depth + f"{reg.path(s)}: {groups[s]}")
        for c in kids.get(s, []):
            walk(c, depth + 1)

    for r in kids.get(None, []):
        walk(r, 0)
    return "\n".join(lines)


# text form -----------------------------------------------------------------

_ITEM = re.compile(r"\[([^\[\]@\s]+)@([0-9.]+)\]")


def format_word(reg: LabelRegistry, word: LayeredWord) -> str:
    return "".join(f"[{x.letter}@{reg.path(x.label)}]" for x in word.letters)


def format_gword(reg: LabelRegistry, gw: GWord) -> str:
    vis = format_word(reg, gw.visible)
    inv = format_word(reg, gw.invisible)
    return f"{vis} $ {inv}".strip()


def parse_word(reg: LabelRegistry, text: str) -> LayeredWord:
    text = text.strip()
    pos = 0
    out = []
    for m in _ITEM.finditer(text):
        if text[pos:m.start()].strip():
            raise ValueError(f"unexpected text {text[pos:m.start()]!r} in layered word")
        pos = m.end()
        out.append(Letter(m.group(1), reg.ensure_path(m.group(2)), reg.fresh_uid()))
    if text[pos:].strip():
        raise ValueError(f"unexpected text {text[pos:]!r} in layered word")
    return LayeredWord(tuple(out))


def parse_gword(reg: LabelRegistry, text: str) -> GWord:
    if text.count("$") != 1:
        raise ValueError("a G-word needs exactly one '$' separator")
    vis, inv = text.split("$")
    return GWord(parse_word(reg, vis), parse_word(reg, inv))
