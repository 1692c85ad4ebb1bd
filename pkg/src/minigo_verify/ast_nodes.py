"""AST for annotated MiniGo compilation units.

Every node carries a SourceSpan. Specification constructs (clauses, ghost
statements, predicates, implementation proofs) live in the same tree as the
executable program; a ghost-erasure walk must be able to strip them all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .source import SourceSpan


# ── Type expressions ──────────────────────────────────────────────


@dataclass
class TypeExpr:
    span: SourceSpan


@dataclass
class NamedType(TypeExpr):
    name: str                      # "int", "bool", "counter", "sync.WaitGroup"


@dataclass
class PointerType(TypeExpr):
    elem: TypeExpr


@dataclass
class ArrayType(TypeExpr):
    length: int
    elem: TypeExpr


@dataclass
class SliceType(TypeExpr):
    elem: TypeExpr


@dataclass
class ChanType(TypeExpr):
    elem: TypeExpr
    direction: str                 # "both" | "send" | "recv"


@dataclass
class SeqType(TypeExpr):
    elem: TypeExpr


@dataclass
class PredType(TypeExpr):
    params: list[TypeExpr]


@dataclass
class StructType(TypeExpr):
    fields: list[tuple[str, TypeExpr]]


@dataclass
class InterfaceType(TypeExpr):
    preds: list["PredSig"]
    methods: list["MethodSig"]     # includes pure methods (flagged)


@dataclass
class PredSig:
    span: SourceSpan
    name: str
    params: list["Param"]


@dataclass
class MethodSig:
    span: SourceSpan
    name: str
    pure: bool
    params: list["Param"]
    results: list["Param"]
    spec: "SpecClauses"


# ── Expressions ───────────────────────────────────────────────────


@dataclass
class Expr:
    span: SourceSpan


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class Ident(Expr):
    name: str


@dataclass
class FieldSel(Expr):
    base: Expr
    field: str


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class Slicing(Expr):
    base: Expr
    lo: Optional[Expr]
    hi: Optional[Expr]


@dataclass
class AddrOf(Expr):
    target: Expr


@dataclass
class Deref(Expr):
    target: Expr


@dataclass
class Unary(Expr):
    op: str                        # "-" | "!"
    operand: Expr


@dataclass
class Binary(Expr):
    op: str                        # + - * / % == != < <= > >= && || ==> ++
    left: Expr
    right: Expr


@dataclass
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr


@dataclass
class Call(Expr):
    callee: Expr                   # Ident, FieldSel (method), or PartialApp
    args: list[Expr]


@dataclass
class MakeExpr(Expr):
    type: TypeExpr
    args: list[Expr]


@dataclass
class Recv(Expr):
    channel: Expr


@dataclass
class TypeAssert(Expr):
    base: Expr
    type: TypeExpr


@dataclass
class TypeOfExpr(Expr):
    operand: Expr


@dataclass
class OldExpr(Expr):
    operand: Expr


@dataclass
class LenExpr(Expr):
    operand: Expr


@dataclass
class Unfolding(Expr):
    instance: "AccAssertion"       # predicate instance + amount
    body: Expr


@dataclass
class CompositeLit(Expr):
    """T{...} for array/seq/struct literal types."""

    type: TypeExpr
    elems: list[Expr]


@dataclass
class PartialApp(Expr):
    """Name{a, _, b}: a first-class predicate value with holes."""

    callee: Expr                   # Ident or FieldSel naming a predicate
    args: list[Optional[Expr]]     # None marks a hole


@dataclass
class Forall(Expr):
    vars: list[str]
    var_type: TypeExpr
    trigger: Optional[Expr]
    body: Expr


@dataclass
class AccAssertion(Expr):
    """acc(target, amount); amount None means full (1/1)."""

    target: Expr
    amount: Optional["PermExpr"]


@dataclass
class PermExpr:
    span: SourceSpan
    wildcard: bool
    num: int = 1
    den: int = 1


@dataclass
class SeqLit(Expr):
    elem_type: TypeExpr
    elems: list[Expr]


# ── Statements ────────────────────────────────────────────────────


@dataclass
class Stmt:
    span: SourceSpan


@dataclass
class Block(Stmt):
    stmts: list[Stmt]


@dataclass
class VarDecl(Stmt):
    name: str
    shared: bool                   # the `@` marker
    type: Optional[TypeExpr]
    init: Optional[Expr]
    ghost: bool = False


@dataclass
class ShortDecl(Stmt):
    names: list[str]
    shared: bool
    rhs: Expr
    ghost: bool = False


@dataclass
class Assign(Stmt):
    targets: list[Expr]
    rhs: Expr
    ghost: bool = False


@dataclass
class OpAssign(Stmt):
    target: Expr
    op: str                        # "+" | "-"
    rhs: Expr


@dataclass
class IncDec(Stmt):
    target: Expr
    op: str                        # "++" | "--"


@dataclass
class If(Stmt):
    cond: Expr
    then: Block
    other: Optional[Stmt]          # Block or If
    ghost: bool = False


@dataclass
class For(Stmt):
    invariants: list[Expr]
    init: Optional[Stmt]
    cond: Optional[Expr]
    post: Optional[Stmt]
    body: Block


@dataclass
class Return(Stmt):
    values: list[Expr]


@dataclass
class GoStmt(Stmt):
    call: Call


@dataclass
class SendStmt(Stmt):
    channel: Expr
    value: Expr


@dataclass
class ExprStmt(Stmt):
    expr: Expr
    ghost: bool = False


@dataclass
class FoldStmt(Stmt):
    unfold: bool
    instance: AccAssertion


@dataclass
class AssertStmt(Stmt):
    assertion: Expr


@dataclass
class GhostBlock(Stmt):
    body: Block


# ── Declarations ──────────────────────────────────────────────────


@dataclass
class SpecClauses:
    preconditions: list[Expr] = field(default_factory=list)
    postconditions: list[Expr] = field(default_factory=list)


@dataclass
class Param:
    span: SourceSpan
    name: str                      # "" for anonymous results
    type: TypeExpr


@dataclass
class Decl:
    span: SourceSpan


@dataclass
class TypeDecl(Decl):
    name: str
    underlying: TypeExpr


@dataclass
class FuncDecl(Decl):
    name: str
    spec: SpecClauses
    pure: bool
    ghost: bool
    receiver: Optional[Param]
    params: list[Param]
    results: list[Param]
    body: Optional[Block]


@dataclass
class PredDecl(Decl):
    name: str
    receiver: Optional[Param]
    params: list[Param]
    body: Optional[Expr]           # None: abstract (interface-only)


@dataclass
class ImplProofDecl(Decl):
    impl_type: TypeExpr
    itf_type: TypeExpr
    members: list[FuncDecl]


@dataclass
class Program:
    span: SourceSpan
    package_name: str
    imports: list[str]
    decls: list[Decl]


GHOST_STMTS = (FoldStmt, AssertStmt, GhostBlock)
