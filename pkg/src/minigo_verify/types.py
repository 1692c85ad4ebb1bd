"""Type representations for the MiniGo subset, including ghost types."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class TypeRepr:
    def is_ghost(self) -> bool:
        return False


@dataclass(frozen=True)
class IntType(TypeRepr):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class BoolType(TypeRepr):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class PointerType(TypeRepr):
    elem: TypeRepr

    def __str__(self) -> str:
        return f"*{self.elem}"


@dataclass(frozen=True)
class StructType(TypeRepr):
    """A named struct; field layout lives in the program's symbol table."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class BuiltinType(TypeRepr):
    name: str                      # e.g. "sync.WaitGroup"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ArrayType(TypeRepr):
    length: int
    elem: TypeRepr

    def __str__(self) -> str:
        return f"[{self.length}]{self.elem}"


@dataclass(frozen=True)
class SliceType(TypeRepr):
    elem: TypeRepr

    def __str__(self) -> str:
        return f"[]{self.elem}"


@dataclass(frozen=True)
class InterfaceType(TypeRepr):
    """A named interface, or the empty interface when name is ''."""

    name: str

    @property
    def empty(self) -> bool:
        return self.name == ""

    def __str__(self) -> str:
        return self.name or "interface{}"


@dataclass(frozen=True)
class ChanType(TypeRepr):
    elem: TypeRepr
    direction: str                 # "both" | "send" | "recv"

    def __str__(self) -> str:
        if self.direction == "recv":
            return f"<-chan {self.elem}"
        if self.direction == "send":
            return f"chan<- {self.elem}"
        return f"chan {self.elem}"


@dataclass(frozen=True)
class SeqType(TypeRepr):
    elem: TypeRepr

    def is_ghost(self) -> bool:
        return True

    def __str__(self) -> str:
        return f"seq[{self.elem}]"


@dataclass(frozen=True)
class PredValType(TypeRepr):
    """First-class predicate value with the given remaining parameter types."""

    params: tuple[TypeRepr, ...]

    def is_ghost(self) -> bool:
        return True

    def __str__(self) -> str:
        return "pred(" + ", ".join(str(p) for p in self.params) + ")"


@dataclass(frozen=True)
class PermType(TypeRepr):
    def is_ghost(self) -> bool:
        return True

    def __str__(self) -> str:
        return "perm"


@dataclass(frozen=True)
class TypeValType(TypeRepr):
    """Result of typeOf(e) and of type literals in comparisons."""

    def is_ghost(self) -> bool:
        return True

    def __str__(self) -> str:
        return "type"


@dataclass(frozen=True)
class PredInstanceType(TypeRepr):
    """A predicate instance: only legal inside acc/fold/unfold and spec atoms."""

    def is_ghost(self) -> bool:
        return True

    def __str__(self) -> str:
        return "pred instance"


INT = IntType()
BOOL = BoolType()
PERM = PermType()
TYPEVAL = TypeValType()
PRED_INSTANCE = PredInstanceType()
EMPTY_INTERFACE = InterfaceType("")
WAITGROUP = BuiltinType("sync.WaitGroup")


def deref(t: TypeRepr) -> TypeRepr:
    return t.elem if isinstance(t, PointerType) else t


def is_comparable_eq(t: TypeRepr) -> bool:
    """Types supporting == in the subset."""
    return isinstance(t, (IntType, BoolType, PointerType, InterfaceType,
                          SeqType, PredValType, TypeValType, ArrayType,
                          ChanType))
