"""Partially ordered label sets.

Labels are nodes of a forest; ``a < b`` (written ``precedes(a, b)``) holds when
``a`` is a strict ancestor of ``b``.  A registry only ever grows, so every
allocation is fresh with respect to all previously used labels.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable

LabelId = int


class LabelError(ValueError):
    pass


@dataclass
class LabelRegistry:
    parents: dict[LabelId, LabelId | None] = field(default_factory=dict)
    roots: list[LabelId] = field(default_factory=list)
    _children: dict[LabelId, list[LabelId]] = field(default_factory=dict, repr=False)
    _next_label: int = 0
    _next_uid: int = 0

    # allocation -----------------------------------------------------------

    def _alloc(self, parent: LabelId | None) -> LabelId:
        lid = self._next_label
        self._next_label += 1
        self.parents[lid] = parent
        self._children[lid] = []
        if parent is None:
            self.roots.append(lid)
        else:
            self._children[parent].append(lid)
        return lid

    def new_root(self) -> LabelId:
        return self._alloc(None)

    def new_child(self, parent: LabelId) -> LabelId:
        self._check(parent)
        return self._alloc(parent)

    def insert_between(self, anc: LabelId, desc: LabelId) -> LabelId:
        """Allocate ``m`` with ``anc < m < desc``; ``desc`` must be a direct child of ``anc``."""
        self._check(anc)
        self._check(desc)
        if not self.precedes(anc, desc):
            raise LabelError(f"label {anc} is not an ancestor of {desc}")
        if self.parents[desc] != anc:
            raise LabelError(f"label {desc} is not a child of {anc}")
        mid = self._alloc(anc)
        siblings = self._children[anc]
        siblings.remove(desc)
        self.parents[desc] = mid
        self._children[mid].append(desc)
        return mid

    def fresh_uid(self) -> int:
        """Occurrence ids for letters; shared counter for the owning session."""
        uid = self._next_uid
        self._next_uid += 1
        return uid

    # queries --------------------------------------------------------------

    def _check(self, lid: LabelId) -> None:
        if lid not in self.parents:
            raise LabelError(f"unknown label {lid}")

    def __contains__(self, lid: object) -> bool:
        return lid in self.parents

    def __len__(self) -> int:
        return len(self.parents)

    def parent(self, lid: LabelId) -> LabelId | None:
        self._check(lid)
        return self.parents[lid]

    def children(self, lid: LabelId) -> list[LabelId]:
        self._check(lid)
        return list(self._children[lid])

    def ancestors(self, lid: LabelId) -> list[LabelId]:
        """Strict ancestors, nearest first."""
        self._check(lid)
        out = []
        p = self.parents[lid]
        while p is not None:
            out.append(p)
            p = self.parents[p]
        return out

    def precedes(self, a: LabelId, b: LabelId) -> bool:
        self._check(a)
        self._check(b)
        p = self.parents[b]
        while p is not None:
            if p == a:
                return True
            p = self.parents[p]
        return False

    def preceq(self, a: LabelId, b: LabelId) -> bool:
        return a == b or self.precedes(a, b)

    def comparable(self, a: LabelId, b: LabelId) -> bool:
        return a == b or self.precedes(a, b) or self.precedes(b, a)

    def child_of(self, s0: LabelId, subset: Iterable[LabelId]) -> set[LabelId]:
        """Children of ``s0`` relative to ``subset``: no member of ``subset`` lies strictly between."""
        subset = set(subset)
        if s0 not in subset:
            raise LabelError(f"label {s0} is not in the subset")
        # nearest ancestor that is s0 or a subset member, memoized along each walk
        stop: dict[LabelId, LabelId | None] = {}
        out = set()
        for t in subset:
            walked = []
            p = self.parents[t]
            while p is not None and p != s0 and p not in subset and p not in stop:
                walked.append(p)
                p = self.parents[p]
            hit = stop[p] if p in stop else p
            for q in walked:
                stop[q] = hit
            if hit == s0:
                out.add(t)
        return out

    def descendants(self, lid: LabelId) -> list[LabelId]:
        """Strict descendants in pre-order."""
        out: list[LabelId] = []
        stack = list(reversed(self._children[lid]))
        while stack:
            t = stack.pop()
            out.append(t)
            stack.extend(reversed(self._children[t]))
        return out

    def path(self, lid: LabelId) -> str:
        """Dotted allocation-ordinal path used in text and DOT output, e.g. ``0.1.3``."""
        chain = [lid] + self.ancestors(lid)
        chain.reverse()
        parts = []
        for i, t in enumerate(chain):
            sibs = self.roots if i == 0 else self._children[chain[i - 1]]
            parts.append(str(sibs.index(t)))
        return ".".join(parts)

    def by_path(self, path: str) -> LabelId:
        parts = [int(p) for p in path.split(".")]
        try:
            lid = self.roots[parts[0]]
            for p in parts[1:]:
                lid = self._children[lid][p]
        except IndexError:
            raise LabelError(f"no label at path {path}") from None
        return lid

    def ensure_path(self, path: str) -> LabelId:
        """Look up ``path``, allocating any missing trailing nodes in order."""
        parts = [int(p) for p in path.split(".")]
        while len(self.roots) <= parts[0]:
            self.new_root()
        lid = self.roots[parts[0]]
        for p in parts[1:]:
            while len(self._children[lid]) <= p:
                self.new_child(lid)
            lid = self._children[lid][p]
        return lid

    def clone(self) -> LabelRegistry:
        return copy.deepcopy(self)
