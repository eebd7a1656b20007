"""Elementary layer functions (append, insert, delete, copy) on invisible layers.

A function is applied relative to a head label ``s_i``.  Its target is a
symbolic slot: ``NEW`` (a freshly allocated child of ``s_i``) or an integer
``k`` meaning the k-th child of ``s_i`` among the labels of the word, oldest
first.  For append, a missing k-th child is allocated fresh.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Literal

from .labels import LabelId, LabelRegistry
from .words import LayeredWord, Letter, labels_of

NEW = "new"
Slot = int | Literal["new"]
Kind = Literal["app", "ins", "del", "copy"]


class LayerFnError(ValueError):
    pass


@dataclass(frozen=True)
class LayerFn:
    kind: Kind
    slot: Slot = 1
    payload: tuple[str, ...] = ()

    def __str__(self) -> str:
        slot = "new" if self.slot == NEW else f"child#{self.slot}"
        if self.kind in ("app", "ins"):
            text = "".join(self.payload) if all(len(a) == 1 for a in self.payload) else ",".join(self.payload)
            return f'{self.kind}({slot}, "{text}")'
        return f"{self.kind}({slot})"


def ordered_children(reg: LabelRegistry, word: LayeredWord, s_i: LabelId) -> list[LabelId]:
    return sorted(reg.child_of(s_i, labels_of(word) | {s_i}))


def _resolve(reg: LabelRegistry, word: LayeredWord, s_i: LabelId, slot: Slot) -> LabelId:
    if slot == NEW:
        raise LayerFnError("this layer function needs an existing child slot")
    kids = ordered_children(reg, word, s_i)
    if not 1 <= slot <= len(kids):
        raise LayerFnError(f"label {s_i} has no child #{slot} in the invisible layer")
    return kids[slot - 1]


def apply_layer_fn(reg: LabelRegistry, word: LayeredWord, fn: LayerFn, s_i: LabelId,
                   k2: int | None = None) -> LayeredWord:
    if fn.kind in ("app", "ins") and k2 is not None and len(fn.payload) > k2:
        raise LayerFnError(f"payload {fn.payload} exceeds rewrite depth {k2}")

    if fn.kind == "app":
        if fn.slot == NEW:
            target = reg.new_child(s_i)
        else:
            kids = ordered_children(reg, word, s_i)
            target = kids[fn.slot - 1] if fn.slot <= len(kids) else reg.new_child(s_i)
        added = tuple(Letter(a, target, reg.fresh_uid()) for a in fn.payload)
        return LayeredWord(word.letters + added)

    target = _resolve(reg, word, s_i, fn.slot)

    if fn.kind == "ins":
        mid = reg.insert_between(reg.parent(target), target)
        added = tuple(Letter(a, mid, reg.fresh_uid()) for a in fn.payload)
        return LayeredWord(word.letters + added)

    if fn.kind == "del":
        return LayeredWord(tuple(
            x for x in word.letters
            if x.label != target and not reg.precedes(target, x.label)
        ))

    if fn.kind == "copy":
        present = labels_of(word)
        subtree = [t for t in present if t == target or reg.precedes(target, t)]
        mapping: dict[LabelId, LabelId] = {target: reg.new_child(s_i)}
        # parents before children: sort by depth
        for t in sorted(subtree, key=lambda t: (len(reg.ancestors(t)), t)):
            if t == target:
                continue
            up = next(a for a in reg.ancestors(t) if a in mapping)
            mapping[t] = reg.new_child(mapping[up])
        added = tuple(
            Letter(x.letter, mapping[x.label], reg.fresh_uid())
            for x in word.letters if x.label in mapping
        )
        return LayeredWord(word.letters + added)

    raise LayerFnError(f"unknown layer function {fn.kind}")


def apply_chain(reg: LabelRegistry, word: LayeredWord, chain: tuple[LayerFn, ...] | list[LayerFn],
                s_i: LabelId, k1: int | None = None, k2: int | None = None) -> LayeredWord:
    if k1 is not None and len(chain) > k1:
        raise LayerFnError(f"chain of {len(chain)} functions exceeds replication index {k1}")
    for fn in chain:
        word = apply_layer_fn(reg, word, fn, s_i, k2)
    return word


# text syntax ---------------------------------------------------------------

_FN = re.compile(
    r'\s*(app|ins|del|copy)\(\s*(?:\w+\.)?(new|child_new|child#\d+)\s*(?:,\s*"([^"]*)"\s*)?\)\s*'
)


def split_letters(text: str, alphabet: set[str] | frozenset[str] | None = None) -> tuple[str, ...]:
    """Split a payload: explicit separators (space or comma) win, then whole-token
    alphabet membership, then one letter per character."""
    text = text.strip()
    if not text:
        return ()
    if " " in text or "," in text:
        return tuple(t for t in re.split(r"[\s,]+", text) if t)
    if alphabet is not None and text in alphabet:
        return (text,)
    return tuple(text)


def parse_chain(text: str, alphabet: set[str] | frozenset[str] | None = None) -> tuple[LayerFn, ...]:
    """Parse ``id`` or a ``;``-separated list like ``app(new, "bb"); del(child#1)``.

    A slot may carry a label-variable prefix (``h.child#1``); ``child_new`` is
    accepted as a synonym of ``new``.
    """
    text = text.strip()
    if text in ("", "id"):
        return ()
    out = []
    for part in text.split(";"):
        if not part.strip():
            continue
        m = _FN.fullmatch(part)
        if not m:
            raise LayerFnError(f"cannot parse layer function {part.strip()!r}")
        kind, slot_s, payload = m.groups()
        slot: Slot = NEW if slot_s in ("new", "child_new") else int(slot_s[6:])
        if kind in ("app", "ins"):
            if payload is None:
                raise LayerFnError(f"{kind} needs a payload")
            if kind == "ins" and slot == NEW:
                raise LayerFnError("ins needs an existing child slot")
            out.append(LayerFn(kind, slot, split_letters(payload, alphabet)))
        else:
            if payload is not None:
                raise LayerFnError(f"{kind} takes no payload")
            if slot == NEW:
                raise LayerFnError(f"{kind} needs an existing child slot")
            out.append(LayerFn(kind, slot))
    return tuple(out)
