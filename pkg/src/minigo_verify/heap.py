"""Symbolic heap chunks, snapshots, and machine states.

The heap is a list of chunks: single fields, index ranges of a container
(quantified permissions), predicate instances, and quantified predicate
instances. Predicate chunks carry snapshot tokens so that unfolding yields
the same values every time; tokens from produced-from-thin-air chunks
expand lazily and memoize their expansion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import terms as tm
from .perm import Perm

# ── snapshots ─────────────────────────────────────────────────────


class SnapNode:
    def key(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class SnapUnit(SnapNode):
    def key(self) -> str:
        return "u"


@dataclass(frozen=True)
class SnapVal(SnapNode):
    val: tm.Term

    def key(self) -> str:
        return f"v:{tm.smt(self.val)}"


@dataclass(frozen=True)
class SnapMap(SnapNode):
    vm: tm.Term

    def key(self) -> str:
        return f"m:{tm.smt(self.vm)}"


@dataclass(frozen=True)
class SnapPred(SnapNode):
    token: "SnapToken"

    def key(self) -> str:
        return f"p:{self.token.ident}"


@dataclass(frozen=True)
class SnapAnd(SnapNode):
    left: SnapNode
    right: SnapNode

    def key(self) -> str:
        return f"({self.left.key()};{self.right.key()})"


@dataclass(frozen=True)
class SnapGuard(SnapNode):
    taken: Optional[SnapNode]            # None: guard was false, nothing inside

    def key(self) -> str:
        return f"g:{self.taken.key() if self.taken else '-'}"


_token_ids = itertools.count()


class SnapToken:
    """Identity of one predicate chunk's contents.

    content is the structured snapshot recorded at fold time, or None for
    chunks produced from thin air; the first unfold fills it in so later
    unfolds (on any path) see the same values.
    """

    __slots__ = ("ident", "content")

    def __init__(self, content: Optional[SnapNode] = None) -> None:
        self.ident = next(_token_ids)
        self.content = content

    def __repr__(self) -> str:
        return f"tok{self.ident}"


# ── chunks ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class FieldChunk:
    ref: tm.Term
    field: str
    sort: str
    val: tm.Term
    amt: Perm


@dataclass(frozen=True)
class CellsChunk:
    """Per-index permission amt to container cells [lo, hi); values boxed in vm."""

    arr: tm.Term
    lo: tm.Term
    hi: tm.Term
    amt: Perm
    vm: tm.Term


@dataclass(frozen=True)
class PredChunk:
    key: str
    args: tuple[tm.Term, ...]
    amt: Perm
    token: SnapToken


@dataclass(frozen=True)
class QPredChunk:
    """Quantified predicate instances key(args(v)) for v in [lo, hi)."""

    key: str
    var: tm.Term                          # bound variable ("var" term)
    lo: tm.Term
    hi: tm.Term
    args: tuple[tm.Term, ...]             # may mention var
    amt: Perm
    fam: dict = field(default_factory=dict, compare=False)  # idx key -> SnapToken

    def args_at(self, idx: tm.Term) -> tuple[tm.Term, ...]:
        sub = {self.var.name: idx}
        return tuple(tm.substitute(a, sub) for a in self.args)

    def token_at(self, idx: tm.Term) -> SnapToken:
        key = tm.smt(idx)
        if key not in self.fam:
            self.fam[key] = SnapToken()
        return self.fam[key]


Chunk = Union[FieldChunk, CellsChunk, PredChunk, QPredChunk]


# ── state ─────────────────────────────────────────────────────────


class State:
    """Store, heap, path condition, and old-state snapshots for one path."""

    __slots__ = ("store", "heap", "pc", "old", "done")

    def __init__(self, store: Optional[dict[str, tm.Term]] = None,
                 heap: Optional[list[Chunk]] = None,
                 pc: Optional[list[tm.Term]] = None,
                 old: Optional[dict[str, "State"]] = None) -> None:
        self.store: dict[str, tm.Term] = store if store is not None else {}
        self.heap: list[Chunk] = heap if heap is not None else []
        self.pc: list[tm.Term] = pc if pc is not None else []
        self.old: dict[str, State] = old if old is not None else {}
        self.done = False                 # path ended (return executed)

    def clone(self) -> "State":
        st = State(dict(self.store), list(self.heap), list(self.pc),
                   dict(self.old))
        st.done = self.done
        return st

    def snapshot(self) -> "State":
        """Frozen copy for old-state evaluation (shares pc growth)."""
        return State(dict(self.store), list(self.heap), self.pc, dict(self.old))

    def assume(self, t: tm.Term) -> None:
        if not tm.is_true(t):
            self.pc.append(t)

    def remove_chunk(self, chunk: Chunk) -> None:
        for i, c in enumerate(self.heap):
            if c is chunk:
                del self.heap[i]
                return
        raise AssertionError("chunk not in heap")

    def replace_chunk(self, old_chunk: Chunk, new_chunk: Chunk) -> None:
        for i, c in enumerate(self.heap):
            if c is old_chunk:
                self.heap[i] = new_chunk
                return
        raise AssertionError("chunk not in heap")


def with_amt(chunk: Chunk, amt: Perm) -> Chunk:
    return replace(chunk, amt=amt)
