"""First-order terms over the verifier's mathematical value model.

Terms are immutable and carry their sort. Serialization targets SMT-LIB 2.6.
Light constant folding keeps path conditions small.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from typing import Iterable, Optional

# ── sorts ─────────────────────────────────────────────────────────

INT = "Int"
BOOL = "Bool"
REF = "Ref"
POLY = "Poly"
PREDV = "PredV"
TYPEC = "TypeC"
ADDR = "Addr"
SLICE = "Slice"
IFACE = "IFace"
VMAP = "(Array Int Poly)"


def seq_sort(elem: str) -> str:
    return f"Seq!{mangle(elem)}"


def is_seq_sort(sort: str) -> bool:
    return sort.startswith("Seq!")


def seq_elem_sort(sort: str) -> str:
    assert is_seq_sort(sort)
    return sort[4:]


def mangle(sort: str) -> str:
    """Sort name usable inside an SMT function symbol."""
    return sort.replace("(Array Int Poly)", "VMap")


# ── terms ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Term:
    op: str                     # "const" | "int" | "bool" | "forall" | fn name
    sort: str
    args: tuple["Term", ...] = ()
    name: str = ""              # constant name / literal text
    binders: tuple[tuple[str, str], ...] = ()   # forall: (name, sort)*
    patterns: tuple["Term", ...] = ()

    def __str__(self) -> str:
        return smt(self)


TRUE = Term("bool", BOOL, name="true")
FALSE = Term("bool", BOOL, name="false")


def mk_int(value: int) -> Term:
    return Term("int", INT, name=str(value))


def mk_bool(value: bool) -> Term:
    return TRUE if value else FALSE


def const(name: str, sort: str) -> Term:
    return Term("const", sort, name=name)


def var(name: str, sort: str) -> Term:
    return Term("var", sort, name=name)


def app(fn: str, sort: str, *args: Term) -> Term:
    return Term(fn, sort, tuple(args))


def is_true(t: Term) -> bool:
    return t.op == "bool" and t.name == "true"


def is_false(t: Term) -> bool:
    return t.op == "bool" and t.name == "false"


def mk_not(t: Term) -> Term:
    if is_true(t):
        return FALSE
    if is_false(t):
        return TRUE
    if t.op == "not":
        return t.args[0]
    return Term("not", BOOL, (t,))


def mk_and(*ts: Term) -> Term:
    flat: list[Term] = []
    for t in ts:
        if is_true(t):
            continue
        if is_false(t):
            return FALSE
        if t.op == "and":
            flat.extend(t.args)
        else:
            flat.append(t)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return Term("and", BOOL, tuple(flat))


def mk_or(*ts: Term) -> Term:
    flat: list[Term] = []
    for t in ts:
        if is_false(t):
            continue
        if is_true(t):
            return TRUE
        if t.op == "or":
            flat.extend(t.args)
        else:
            flat.append(t)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Term("or", BOOL, tuple(flat))


def mk_implies(a: Term, b: Term) -> Term:
    if is_true(a):
        return b
    if is_false(a) or is_true(b):
        return TRUE
    return Term("=>", BOOL, (a, b))


def mk_eq(a: Term, b: Term) -> Term:
    if a == b:
        return TRUE
    if a.op == "int" and b.op == "int":
        return mk_bool(a.name == b.name)
    return Term("=", BOOL, (a, b))


def mk_ite(c: Term, a: Term, b: Term) -> Term:
    if is_true(c):
        return a
    if is_false(c):
        return b
    if a == b:
        return a
    return Term("ite", a.sort, (c, a, b))


def _fold_arith(op: str, a: Term, b: Term) -> Optional[Term]:
    if a.op == "int" and b.op == "int":
        x, y = int(a.name), int(b.name)
        if op == "+":
            return mk_int(x + y)
        if op == "-":
            return mk_int(x - y)
        if op == "*":
            return mk_int(x * y)
    return None


def mk_add(a: Term, b: Term) -> Term:
    folded = _fold_arith("+", a, b)
    if folded is not None:
        return folded
    if b.op == "int" and b.name == "0":
        return a
    if a.op == "int" and a.name == "0":
        return b
    return Term("+", INT, (a, b))


def mk_sub(a: Term, b: Term) -> Term:
    folded = _fold_arith("-", a, b)
    if folded is not None:
        return folded
    if b.op == "int" and b.name == "0":
        return a
    return Term("-", INT, (a, b))


def mk_mul(a: Term, b: Term) -> Term:
    folded = _fold_arith("*", a, b)
    if folded is not None:
        return folded
    return Term("*", INT, (a, b))


def cmp_term(op: str, a: Term, b: Term) -> Term:
    if a.op == "int" and b.op == "int":
        x, y = int(a.name), int(b.name)
        return mk_bool({"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op])
    return Term(op, BOOL, (a, b))


def mk_forall(binders: Iterable[tuple[str, str]], body: Term,
              patterns: Iterable[Term] = ()) -> Term:
    if is_true(body):
        return TRUE
    return Term("forall", BOOL, (body,), binders=tuple(binders),
                patterns=tuple(patterns))


def mk_select(vm: Term, idx: Term) -> Term:
    if vm.op == "store":
        # select-of-store folding for syntactic index equality
        stored_idx, stored_val = vm.args[1], vm.args[2]
        if stored_idx == idx:
            return stored_val
    return Term("select", POLY, (vm, idx))


def mk_store(vm: Term, idx: Term, val: Term) -> Term:
    return Term("store", VMAP, (vm, idx, val))


# ── free variables and substitution ───────────────────────────────


def free_vars(t: Term) -> frozenset[str]:
    if t.op == "var":
        return frozenset({t.name})
    if t.op == "forall":
        bound = {n for n, _ in t.binders}
        return frozenset(v for v in free_vars(t.args[0]) if v not in bound)
    out: set[str] = set()
    for a in t.args:
        out |= free_vars(a)
    return frozenset(out)


def substitute(t: Term, mapping: dict[str, Term]) -> Term:
    if not mapping:
        return t
    if t.op == "var":
        return mapping.get(t.name, t)
    if t.op == "forall":
        inner = {k: v for k, v in mapping.items()
                 if k not in {n for n, _ in t.binders}}
        return Term("forall", BOOL, (substitute(t.args[0], inner),),
                    binders=t.binders,
                    patterns=tuple(substitute(p, inner) for p in t.patterns))
    if not t.args:
        return t
    return Term(t.op, t.sort, tuple(substitute(a, mapping) for a in t.args),
                name=t.name, binders=t.binders, patterns=t.patterns)


# ── serialization ─────────────────────────────────────────────────

_SMT_OPS = {"and", "or", "not", "=>", "=", "ite", "<=", "<", ">=", ">",
            "+", "-", "*", "div", "mod", "select", "store", "distinct"}


def smt(t: Term) -> str:
    if t.op == "const" or t.op == "var":
        return t.name
    if t.op == "int":
        v = int(t.name)
        return str(v) if v >= 0 else f"(- {-v})"
    if t.op == "bool":
        return t.name
    if t.op == "forall":
        binders = " ".join(f"({n} {s})" for n, s in t.binders)
        body = smt(t.args[0])
        if t.patterns:
            pats = " ".join(smt(p) for p in t.patterns)
            body = f"(! {body} :pattern ({pats}))"
        return f"(forall ({binders}) {body})"
    if not t.args:
        return t.op
    inner = " ".join(smt(a) for a in t.args)
    return f"({t.op} {inner})"


# ── fresh names (process-global, restart-safe) ────────────────────

_counter = itertools.count()
_lock = threading.Lock()


def fresh_name(prefix: str) -> str:
    with _lock:
        n = next(_counter)
    return f"{prefix}!{n}"
