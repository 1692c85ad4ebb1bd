"""Symbolic execution engine: produce/consume of assertions over a chunk
heap, expression evaluation with permission accounting, statement execution
with modular calls, and loop verification with invariant havocking.

Evaluation conventions:
  - eval mutates the current state only monotonically (path-condition
    assumptions, allocations, snapshot expansions); path forks happen only
    in statement execution and in produce/consume of conditional assertions.
  - consume evaluates expressions against the state at consume entry while
    removing permissions from the working heap (so later conjuncts still
    see values covered by earlier ones).
  - old(e) evaluates e against a recorded old state under the current path
    condition.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, TYPE_CHECKING

from . import ast_nodes as A
from . import builtins_def as B
from . import terms as tm
from . import types as ty
from .errors import Reason, VerificationError, Verdict, VerifyFailure
from .heap import (CellsChunk, Chunk, FieldChunk, PredChunk, QPredChunk,
                   SnapAnd, SnapGuard, SnapMap, SnapNode, SnapPred, SnapToken,
                   SnapUnit, SnapVal, State, with_amt)
from .perm import (FULL, INSUFFICIENT, NONE, WILDCARD, Perm, amount_add,
                   amount_mul, amount_sub)
from .printer import Printer
from .smt_theory import Theory
from .solver import QueryResult, SolverSession
from .source import SourceSpan
from .typecheck import ProgramInfo, type_key

if TYPE_CHECKING:
    from .interfaces import InterfaceSemantics


@dataclass
class Env:
    """Evaluation environment: bindings that shadow the store."""

    vars: dict[str, tm.Term] = field(default_factory=dict)
    old_state: Optional[State] = None
    guard: Optional[tm.Term] = None       # reads are demanded only under guard
    closed: bool = False                  # contract env: no fallthrough to store
    fuel: int = 2

    def child(self, **kw) -> "Env":
        return replace(self, **kw)

    def bind(self, extra: dict[str, tm.Term]) -> "Env":
        merged = dict(self.vars)
        merged.update(extra)
        return replace(self, vars=merged)

    def with_guard(self, g: tm.Term) -> "Env":
        if self.guard is None or tm.is_true(self.guard):
            return replace(self, guard=g)
        return replace(self, guard=tm.mk_and(self.guard, g))


@dataclass
class ErrCtx:
    """How a failed consume is reported."""

    reason: Reason
    site: Optional[SourceSpan] = None     # overrides the conjunct's own span

    def error(self, conjunct: A.Expr, detail: str = "") -> VerificationError:
        span = self.site or conjunct.span
        return VerificationError(span, self.reason, _pretty(conjunct), detail)


_printer = Printer()


def _pretty(e: A.Expr) -> str:
    try:
        return _printer.expr(e)
    except Exception:
        return "<assertion>"


def _is_perm(e: A.Expr) -> bool:
    return isinstance(getattr(e, "ty", None), ty.PredInstanceType)


@dataclass
class EngineConfig:
    max_paths: int = 4096
    lenient_shared: bool = False


class Engine:
    def __init__(self, info: ProgramInfo, theory: Theory,
                 session: SolverSession,
                 interfaces: "InterfaceSemantics",
                 config: Optional[EngineConfig] = None) -> None:
        self.info = info
        self.theory = theory
        self.session = session
        self.itf = interfaces
        self.config = config or EngineConfig()
        self.errors: list[VerificationError] = []
        self.member_id = "?"
        self.pure_memo: dict[tuple, tuple[tm.Term, list[tm.Term]]] = {}
        self.path_count = 0
        from .concurrency import Concurrency
        self.conc = Concurrency(self)

    # ── solver helpers ───────────────────────────────────────────

    def fresh(self, sort: str, prefix: str = "k") -> tm.Term:
        return self.session.fresh(sort, prefix)

    def fresh_var(self, prefix: str = "qv") -> tm.Term:
        return tm.var(tm.fresh_name(prefix), tm.INT)

    def prove(self, st: State, goal: tm.Term) -> QueryResult:
        if tm.is_true(goal):
            return QueryResult.VALID
        return self.session.check_valid(st.pc, goal)

    def holds(self, st: State, goal: tm.Term) -> bool:
        return self.prove(st, goal) is QueryResult.VALID

    def feasible(self, st: State) -> bool:
        return self.session.check_sat(st.pc) != "unsat"

    def sort_of(self, t: ty.TypeRepr) -> str:
        return self.theory.sort_of(t)

    def type_of(self, e: A.Expr) -> ty.TypeRepr:
        return e.ty                                        # type: ignore[attr-defined]

    # ── value helpers ────────────────────────────────────────────

    def zero_value(self, t: ty.TypeRepr, span: SourceSpan) -> tm.Term:
        if isinstance(t, ty.IntType):
            return tm.mk_int(0)
        if isinstance(t, ty.BoolType):
            return tm.FALSE
        raise VerifyFailure(VerificationError(
            span, Reason.CALL_UNSAFE, str(t), "type needs an initializer"))

    def havoc_value(self, t: ty.TypeRepr, prefix: str = "h") -> tm.Term:
        term = self.fresh(self.sort_of(t), prefix)
        self._assume_type_invariants(None, term, t)
        return term

    def _assume_type_invariants(self, st: Optional[State], term: tm.Term,
                                t: ty.TypeRepr) -> None:
        facts: list[tm.Term] = []
        if isinstance(t, ty.SliceType):
            facts.append(tm.cmp_term(">=", self.theory.slice_len(term), tm.mk_int(0)))
            facts.append(tm.cmp_term(">=", self.theory.slice_off(term), tm.mk_int(0)))
        if st is not None:
            for f in facts:
                st.assume(f)
        else:
            for f in facts:
                self.session.add_assert(f)

    # ══ expression evaluation ════════════════════════════════════

    def eval(self, st: State, e: A.Expr, env: Env) -> tm.Term:
        if isinstance(e, A.IntLit):
            return tm.mk_int(e.value)
        if isinstance(e, A.BoolLit):
            return tm.mk_bool(e.value)
        if isinstance(e, A.Ident):
            return self._eval_ident(st, e, env)
        if isinstance(e, A.Binary):
            return self._eval_binary(st, e, env)
        if isinstance(e, A.Unary):
            v = self.eval(st, e.operand, env)
            if e.op == "-":
                return tm.mk_sub(tm.mk_int(0), v)
            return tm.mk_not(v)
        if isinstance(e, A.Ternary):
            c = self.eval(st, e.cond, env)
            a = self.eval(st, e.then, env.with_guard(c))
            b = self.eval(st, e.other, env.with_guard(tm.mk_not(c)))
            return tm.mk_ite(c, a, b)
        if isinstance(e, A.FieldSel):
            base = self.eval(st, e.base, env)
            ft = self.type_of(e)
            return self.read_field(st, base, e.field, self.sort_of(ft),
                                   e.span, env.guard)
        if isinstance(e, A.Index):
            return self._eval_index(st, e, env)
        if isinstance(e, A.Slicing):
            return self._eval_slicing(st, e, env)
        if isinstance(e, A.AddrOf):
            return self._eval_addr(st, e, env)
        if isinstance(e, A.Deref):
            base = self.eval(st, e.target, env)
            return self.read_field(st, base, "$cell",
                                   self.sort_of(self.type_of(e)), e.span, env.guard)
        if isinstance(e, A.LenExpr):
            return self._eval_len(st, e, env)
        if isinstance(e, A.OldExpr):
            old = env.old_state or st.old.get("pre")
            if old is None:
                raise VerifyFailure(VerificationError(
                    e.span, Reason.CALL_UNSAFE, _pretty(e), "no old state here"))
            return self.eval(old, e.operand, env.child(old_state=None))
        if isinstance(e, A.TypeOfExpr):
            return self.theory.iface_ty(self.eval(st, e.operand, env))
        if isinstance(e, A.TypeAssert):
            return self._eval_type_assert(st, e, env)
        if isinstance(e, A.CompositeLit):
            return self._eval_array_lit(st, e, env)
        if isinstance(e, A.SeqLit):
            return self._eval_seq_lit(st, e, env)
        if isinstance(e, A.PartialApp):
            return self._eval_partial_app(st, e, env)
        if isinstance(e, A.Forall):
            return self.forall_term(st, e, env)
        if isinstance(e, A.Unfolding):
            return self._eval_unfolding(st, e, env)
        if isinstance(e, A.Call):
            return self._eval_call(st, e, env)
        if hasattr(e, "as_type"):
            return self.theory.type_const(e.as_type)       # type: ignore[attr-defined]
        raise VerifyFailure(VerificationError(
            e.span, Reason.CALL_UNSAFE, _pretty(e), "unsupported expression"))

    def _eval_ident(self, st: State, e: A.Ident, env: Env) -> tm.Term:
        if hasattr(e, "as_type"):
            return self.theory.type_const(e.as_type)       # type: ignore[attr-defined]
        name = e.name
        if name in env.vars:
            return env.vars[name]
        if env.closed:
            raise AssertionError(f"unbound contract name {name}")
        if name in st.store:
            val = st.store[name]
            t = self.type_of(e)
            kind = self._shared_kind(name)
            if kind == "cell":
                return self.read_field(st, val, "$cell", self.sort_of(t),
                                       e.span, env.guard)
            if kind == "array":
                assert isinstance(t, ty.ArrayType)
                return self.array_to_value(st, val, t, e.span, env.guard)
            return val
        raise AssertionError(f"unbound name {name} in {self.member_id}")

    def _shared_kind(self, name: str) -> Optional[str]:
        return self.shared_kinds.get(name) if hasattr(self, "shared_kinds") else None

    def _eval_binary(self, st: State, e: A.Binary, env: Env) -> tm.Term:
        op = e.op
        if op == "==>":
            left = self.eval(st, e.left, env)
            right = self.eval(st, e.right, env.with_guard(left))
            return tm.mk_implies(left, right)
        if op in ("&&", "||"):
            left = self.eval(st, e.left, env)
            guard = left if op == "&&" else tm.mk_not(left)
            right = self.eval(st, e.right, env.with_guard(guard))
            return tm.mk_and(left, right) if op == "&&" else tm.mk_or(left, right)
        if op == "++":
            a = self.eval(st, e.left, env)
            b = self.eval(st, e.right, env)
            return self.theory.seq_concat(a, b)
        a = self.eval(st, e.left, env)
        b = self.eval(st, e.right, env)
        if op in ("+", "-", "*"):
            return {"+": tm.mk_add, "-": tm.mk_sub, "*": tm.mk_mul}[op](a, b)
        if op in ("/", "%"):
            goal = tm.mk_not(tm.mk_eq(b, tm.mk_int(0)))
            if env.guard is not None:
                goal = tm.mk_implies(env.guard, goal)
            if not self.holds(st, goal):
                raise VerifyFailure(VerificationError(
                    e.span, Reason.CALL_UNSAFE, _pretty(e),
                    "divisor may be zero"))
            return tm.app("div" if op == "/" else "mod", tm.INT, a, b)
        if op in ("<", "<=", ">", ">="):
            return tm.cmp_term(op, a, b)
        assert op in ("==", "!=")
        eq = self.values_equal(a, b)
        return eq if op == "==" else tm.mk_not(eq)

    def values_equal(self, a: tm.Term, b: tm.Term) -> tm.Term:
        if tm.is_seq_sort(a.sort) and tm.is_seq_sort(b.sort):
            return self.theory.seq_eq(a, b)
        return tm.mk_eq(a, b)

    def _eval_index(self, st: State, e: A.Index, env: Env) -> tm.Term:
        bt = self.type_of(e.base)
        idx = self.eval(st, e.index, env)
        if isinstance(bt, ty.SeqType):
            base = self.eval(st, e.base, env)
            return self.theory.seq_idx(base, idx)
        arr, abs_idx = self._cell_target(st, e.base, idx, env)
        elem_sort = self.sort_of(self.type_of(e))
        return self.read_cell(st, arr, abs_idx, elem_sort, e.span, env.guard)

    def _cell_target(self, st: State, base: A.Expr, idx: tm.Term,
                     env: Env) -> tuple[tm.Term, tm.Term]:
        """Resolve base[idx] to (container ref, absolute index)."""
        bt = self.type_of(base)
        if isinstance(bt, ty.ArrayType):
            if isinstance(base, A.Ident) and self._shared_kind(base.name) == "array":
                return st.store[base.name], idx
            raise VerifyFailure(VerificationError(
                base.span, Reason.CALL_UNSAFE, _pretty(base),
                "exclusive arrays cannot be written through"))
        assert isinstance(bt, ty.SliceType)
        s = self.eval(st, base, env)
        return self.theory.slice_arr(s), tm.mk_add(self.theory.slice_off(s), idx)

    def _eval_slicing(self, st: State, e: A.Slicing, env: Env) -> tm.Term:
        bt = self.type_of(e.base)
        lo = self.eval(st, e.lo, env) if e.lo else tm.mk_int(0)
        if isinstance(bt, ty.ArrayType):
            assert isinstance(e.base, A.Ident)
            if self._shared_kind(e.base.name) != "array":
                raise VerifyFailure(VerificationError(
                    e.span, Reason.CALL_UNSAFE, _pretty(e),
                    "slicing requires a shared array"))
            arr = st.store[e.base.name]
            ln = tm.mk_int(bt.length)
            hi = self.eval(st, e.hi, env) if e.hi else ln
            self._check_slice_bounds(st, e, lo, hi, ln, env)
            return self.theory.slice_mk(arr, lo, tm.mk_sub(hi, lo))
        s = self.eval(st, e.base, env)
        ln = self.theory.slice_len(s)
        hi = self.eval(st, e.hi, env) if e.hi else ln
        self._check_slice_bounds(st, e, lo, hi, ln, env)
        return self.theory.slice_mk(
            self.theory.slice_arr(s),
            tm.mk_add(self.theory.slice_off(s), lo), tm.mk_sub(hi, lo))

    def _check_slice_bounds(self, st: State, e: A.Expr, lo: tm.Term,
                            hi: tm.Term, ln: tm.Term, env: Env) -> None:
        goal = tm.mk_and(tm.cmp_term("<=", tm.mk_int(0), lo),
                         tm.cmp_term("<=", lo, hi),
                         tm.cmp_term("<=", hi, ln))
        if env.guard is not None:
            goal = tm.mk_implies(env.guard, goal)
        if not self.holds(st, goal):
            raise VerifyFailure(VerificationError(
                e.span, Reason.CALL_UNSAFE, _pretty(e),
                "slice bounds may be out of range"))

    def _eval_addr(self, st: State, e: A.AddrOf, env: Env) -> tm.Term:
        target = e.target
        if getattr(e, "alloc", False):
            return self._alloc_struct(st, target, env)
        if isinstance(target, A.Ident):
            kind = self._shared_kind(target.name)
            if kind in ("cell", "array", "opaque"):
                return st.store[target.name]
            raise VerifyFailure(VerificationError(
                e.span, Reason.CALL_UNSAFE, _pretty(e),
                "address of exclusive variable"))
        if isinstance(target, A.Index):
            idx = self.eval(st, target.index, env)
            arr, abs_idx = self._cell_target(st, target.base, idx, env)
            return self.theory.addr_mk(arr, abs_idx)
        raise VerifyFailure(VerificationError(
            e.span, Reason.CALL_UNSAFE, _pretty(e), "unsupported address expression"))

    def _alloc_struct(self, st: State, lit: A.PartialApp, env: Env) -> tm.Term:
        struct = lit.struct_name                            # type: ignore[attr-defined]
        ref = self.fresh(tm.REF, "ref")
        for (fname, ftype), arg in zip(self.info.structs[struct], lit.args):
            assert arg is not None
            val = self.eval(st, arg, env)
            val = self._convert(st, val, self.type_of(arg), ftype, arg.span)
            self.add_field_chunk(st, ref, fname, self.sort_of(ftype), val, FULL)
        return ref

    def _eval_len(self, st: State, e: A.LenExpr, env: Env) -> tm.Term:
        t = self.type_of(e.operand)
        if isinstance(t, ty.ArrayType):
            return tm.mk_int(t.length)
        if isinstance(t, ty.SliceType):
            return self.theory.slice_len(self.eval(st, e.operand, env))
        assert isinstance(t, ty.SeqType)
        return self.theory.seq_len(self.eval(st, e.operand, env))

    def _eval_type_assert(self, st: State, e: A.TypeAssert, env: Env) -> tm.Term:
        v = self.eval(st, e.base, env)
        target = e.asserted                                 # type: ignore[attr-defined]
        tc = self.theory.type_const(target)
        goal = tm.mk_eq(self.theory.iface_ty(v), tc)
        if env.guard is not None:
            goal = tm.mk_implies(env.guard, goal)
        if not self.holds(st, goal):
            raise VerifyFailure(VerificationError(
                e.span, Reason.TYPE_ASSERTION_UNSAFE, _pretty(e),
                "dynamic type may differ"))
        return self.theory.unbox(self.theory.iface_val(v), self.sort_of(target))

    def _eval_array_lit(self, st: State, e: A.CompositeLit, env: Env) -> tm.Term:
        t = self.type_of(e)
        assert isinstance(t, ty.ArrayType)
        elem_sort = self.sort_of(t.elem)
        sort = tm.seq_sort(elem_sort)
        out = self.theory.seq_empty(sort)
        for el in e.elems:
            out = self.theory.seq_concat(out, self.theory.seq_unit(
                self.eval(st, el, env), sort))
        return out

    def _eval_seq_lit(self, st: State, e: A.SeqLit, env: Env) -> tm.Term:
        t = self.type_of(e)
        sort = self.sort_of(t)
        if not e.elems:
            return self.theory.seq_empty(sort)
        out: Optional[tm.Term] = None
        for el in e.elems:
            ev = self.eval(st, el, env)
            ev = self._convert(st, ev, self.type_of(el),
                               t.elem, el.span)              # type: ignore[attr-defined]
            unit = self.theory.seq_unit(ev, sort)
            out = unit if out is None else self.theory.seq_concat(out, unit)
        assert out is not None
        return out

    def _eval_partial_app(self, st: State, e: A.PartialApp, env: Env) -> tm.Term:
        if getattr(e, "papp_kind", "") == "struct_lit":
            raise VerifyFailure(VerificationError(
                e.span, Reason.CALL_UNSAFE, _pretty(e),
                "exclusive struct values are not supported; use &T{...}"))
        params = e.param_types                              # type: ignore[attr-defined]
        holes = set(e.holes)                                # type: ignore[attr-defined]
        bound = tuple(i for i in range(len(params)) if i not in holes)
        sorts = tuple(self.sort_of(params[i]) for i in bound)
        ctor = self.theory.predval_ctor(e.pred_key, bound, sorts)  # type: ignore[attr-defined]
        args = []
        for i in bound:
            arg = e.args[i]
            assert arg is not None
            args.append(self.eval(st, arg, env))
        return tm.app(ctor, tm.PREDV, *args)

    def _convert(self, st: State, val: tm.Term, src: ty.TypeRepr,
                 dst: ty.TypeRepr, span: SourceSpan) -> tm.Term:
        """Implicit conversions: concrete into interface types."""
        if src == dst or not isinstance(dst, ty.InterfaceType):
            return val
        if isinstance(src, ty.InterfaceType):
            return val
        tc = self.theory.type_const(src)
        return self.theory.iface_mk(tc, self.theory.box(val))

    def array_to_value(self, st: State, arr: tm.Term, t: ty.ArrayType,
                       span: SourceSpan, guard: Optional[tm.Term]) -> tm.Term:
        """Shared-to-exclusive conversion: read all cells into a seq value."""
        elem_sort = self.sort_of(t.elem)
        sort = tm.seq_sort(elem_sort)
        out = self.theory.seq_empty(sort)
        for i in range(t.length):
            v = self.read_cell(st, arr, tm.mk_int(i), elem_sort, span, guard)
            out = self.theory.seq_concat(out, self.theory.seq_unit(v, sort))
        return out

    # ── quantified boolean terms ─────────────────────────────────

    def forall_term(self, st: State, fa: A.Forall, env: Env) -> tm.Term:
        binders = [(name, tm.INT) for name in fa.vars]
        var_terms = {name: tm.var(name + tm.fresh_name("!q"), tm.INT)
                     for name in fa.vars}
        inner_env = env.bind(var_terms)
        body = fa.body
        if isinstance(body, A.Binary) and body.op == "==>":
            lhs = self.eval(st, body.left, inner_env)
            rhs = self.eval(st, body.right, inner_env.with_guard(lhs))
            term_body = tm.mk_implies(lhs, rhs)
        else:
            term_body = self.eval(st, body, inner_env)
        bound = [(var_terms[name].name, tm.INT) for name in fa.vars]
        return tm.mk_forall(bound, term_body)

    # ══ heap access ══════════════════════════════════════════════

    def add_field_chunk(self, st: State, ref: tm.Term, fname: str, sort: str,
                        val: tm.Term, amt: Perm) -> None:
        for c in st.heap:
            if isinstance(c, FieldChunk) and c.field == fname:
                neq = tm.mk_not(tm.mk_eq(ref, c.ref))
                # aliased fractions agree on the value
                st.assume(tm.mk_or(neq, tm.mk_eq(val, c.val)))
                if (not c.amt.wildcard and not amt.wildcard
                        and c.amt.frac + amt.frac > 1):
                    st.assume(neq)
        st.heap.append(FieldChunk(ref, fname, sort, val, amt))

    def add_cells_chunk(self, st: State, arr: tm.Term, lo: tm.Term, hi: tm.Term,
                        amt: Perm, vm: tm.Term) -> None:
        for c in st.heap:
            if isinstance(c, CellsChunk):
                neq = tm.mk_not(tm.mk_eq(arr, c.arr))
                disjoint = tm.mk_or(tm.cmp_term("<=", hi, c.lo),
                                    tm.cmp_term("<=", c.hi, lo))
                k = self.fresh_var("ol")
                in_both = tm.mk_and(
                    tm.cmp_term("<=", tm.mk_int(0), k.args[0] if False else k),
                    )
                lo_k = tm.mk_and(tm.cmp_term("<=", lo, k), tm.cmp_term("<", k, hi),
                                 tm.cmp_term("<=", c.lo, k), tm.cmp_term("<", k, c.hi))
                same = tm.mk_forall([(k.name, tm.INT)],
                                    tm.mk_implies(lo_k, tm.mk_eq(
                                        tm.mk_select(vm, k), tm.mk_select(c.vm, k))))
                st.assume(tm.mk_or(neq, same))
                if (not c.amt.wildcard and not amt.wildcard
                        and c.amt.frac + amt.frac > 1):
                    st.assume(tm.mk_or(neq, disjoint))
        st.heap.append(CellsChunk(arr, lo, hi, amt, vm))

    def _covers(self, st: State, guard: Optional[tm.Term],
                conds: list[tm.Term]) -> bool:
        goal = tm.mk_and(*conds)
        if guard is not None:
            goal = tm.mk_implies(guard, goal)
        return self.holds(st, goal)

    def read_field(self, st: State, ref: tm.Term, fname: str, sort: str,
                   span: SourceSpan, guard: Optional[tm.Term]) -> tm.Term:
        for c in st.heap:
            if isinstance(c, FieldChunk) and c.field == fname and c.amt.is_positive():
                if c.ref == ref or self._covers(st, guard, [tm.mk_eq(ref, c.ref)]):
                    return self.theory.unbox(c.val, sort) if c.val.sort != sort else c.val
        raise VerifyFailure(VerificationError(
            span, Reason.INSUFFICIENT_PERMISSION, f"acc(&{fname})",
            "no permission to read this location"))

    def read_cell(self, st: State, arr: tm.Term, idx: tm.Term, elem_sort: str,
                  span: SourceSpan, guard: Optional[tm.Term]) -> tm.Term:
        for c in st.heap:
            if isinstance(c, CellsChunk) and c.amt.is_positive():
                conds = [tm.mk_eq(arr, c.arr), tm.cmp_term("<=", c.lo, idx),
                         tm.cmp_term("<", idx, c.hi)]
                if self._covers(st, guard, conds):
                    return self.theory.unbox(tm.mk_select(c.vm, idx), elem_sort)
        raise VerifyFailure(VerificationError(
            span, Reason.INSUFFICIENT_PERMISSION, "acc(&_[_])",
            "no permission to read this index"))

    def write_field(self, st: State, ref: tm.Term, fname: str, val: tm.Term,
                    span: SourceSpan) -> None:
        for c in st.heap:
            if isinstance(c, FieldChunk) and c.field == fname:
                if c.ref == ref or self._covers(st, None, [tm.mk_eq(ref, c.ref)]):
                    if not c.amt.is_full():
                        raise VerifyFailure(VerificationError(
                            span, Reason.INSUFFICIENT_PERMISSION,
                            f"acc(&{fname})", "write requires full permission"))
                    st.replace_chunk(c, replace(c, val=val))
                    return
        raise VerifyFailure(VerificationError(
            span, Reason.INSUFFICIENT_PERMISSION, f"acc(&{fname})",
            "no permission to write this location"))

    def write_cell(self, st: State, arr: tm.Term, idx: tm.Term, val: tm.Term,
                   span: SourceSpan) -> None:
        for c in st.heap:
            if isinstance(c, CellsChunk):
                conds = [tm.mk_eq(arr, c.arr), tm.cmp_term("<=", c.lo, idx),
                         tm.cmp_term("<", idx, c.hi)]
                if self._covers(st, None, conds):
                    if not c.amt.is_full():
                        raise VerifyFailure(VerificationError(
                            span, Reason.INSUFFICIENT_PERMISSION, "acc(&_[_])",
                            "write requires full permission"))
                    new_vm = tm.mk_store(c.vm, idx, self.theory.box(val))
                    st.replace_chunk(c, replace(c, vm=new_vm))
                    return
        raise VerifyFailure(VerificationError(
            span, Reason.INSUFFICIENT_PERMISSION, "acc(&_[_])",
            "no permission to write this index"))

    # ══ produce ══════════════════════════════════════════════════

    def produce(self, st: State, e: A.Expr, scale: Perm, env: Env,
                snap: Optional[SnapNode] = None) -> list[tuple[State, SnapNode]]:
        if not _is_perm(e):
            term = self.eval(st, e, env)
            st.assume(term)
            return [(st, SnapUnit())]
        if isinstance(e, A.Binary) and e.op == "&&":
            lsnap, rsnap = self._split_snap(snap)
            out: list[tuple[State, SnapNode]] = []
            for st1, s1 in self.produce(st, e.left, scale, env, lsnap):
                for st2, s2 in self.produce(st1, e.right, scale, env, rsnap):
                    out.append((st2, SnapAnd(s1, s2)))
            return out
        if isinstance(e, A.Binary) and e.op == "==>":
            cond = self.eval(st, e.left, env)
            inner = snap.taken if isinstance(snap, SnapGuard) else None
            return self._produce_guarded(st, cond, e.right, scale, env, inner)
        if isinstance(e, A.Ternary):
            cond = self.eval(st, e.cond, env)
            tsnap, osnap = self._split_snap(snap)
            tin = tsnap.taken if isinstance(tsnap, SnapGuard) else None
            oin = osnap.taken if isinstance(osnap, SnapGuard) else None
            out = []
            for st1, s1 in self._produce_guarded(st, cond, e.then, scale, env, tin):
                for st2, s2 in self._produce_guarded(
                        st1, tm.mk_not(cond), e.other, scale, env, oin):
                    out.append((st2, SnapAnd(s1, s2)))
            return out
        if isinstance(e, A.Forall):
            return [self._produce_quantified(st, e, scale, env, snap)]
        if isinstance(e, A.AccAssertion):
            amt = self._amount(e.amount)
            return [self._produce_acc(st, e.target, amount_mul(amt, scale),
                                      env, snap, e.span)]
        if isinstance(e, A.Call):
            return [self._produce_acc(st, e, scale, env, snap, e.span)]
        raise AssertionError(f"produce: unexpected assertion {type(e).__name__}")

    def _split_snap(self, snap: Optional[SnapNode]) \
            -> tuple[Optional[SnapNode], Optional[SnapNode]]:
        if isinstance(snap, SnapAnd):
            return snap.left, snap.right
        return None, None

    def _produce_guarded(self, st: State, cond: tm.Term, body: A.Expr,
                         scale: Perm, env: Env, snap: Optional[SnapNode]) \
            -> list[tuple[State, SnapNode]]:
        if tm.is_true(cond):
            return [(s, SnapGuard(sn)) for s, sn in
                    self.produce(st, body, scale, env, snap)]
        if tm.is_false(cond):
            return [(st, SnapGuard(None))]
        out: list[tuple[State, SnapNode]] = []
        taken = st.clone()
        taken.assume(cond)
        if self.feasible(taken):
            for s, sn in self.produce(taken, body, scale, env, snap):
                out.append((s, SnapGuard(sn)))
        skipped = st.clone()
        skipped.assume(tm.mk_not(cond))
        if self.feasible(skipped):
            out.append((skipped, SnapGuard(None)))
        if not out:
            # both branches infeasible: the state itself is dead
            st.assume(tm.FALSE)
            out.append((st, SnapGuard(None)))
        return out

    def _amount(self, p: Optional[A.PermExpr]) -> Perm:
        if p is None:
            return FULL
        if p.wildcard:
            return WILDCARD
        return Perm.fraction(p.num, p.den)

    # quantified permissions: forall v :: lo <= v && v < hi ==> acc(...)
    def _quant_shape(self, st: State, fa: A.Forall, env: Env):
        if len(fa.vars) != 1 or not isinstance(fa.body, A.Binary) \
                or fa.body.op != "==>":
            raise VerifyFailure(VerificationError(
                fa.span, Reason.CALL_UNSAFE, _pretty(fa),
                "unsupported quantified permission shape"))
        var = fa.vars[0]
        vterm = tm.var(var + tm.fresh_name("!q"), tm.INT)
        inner = env.bind({var: vterm})
        lo = hi = None
        for conj in self._conjuncts(fa.body.left):
            if isinstance(conj, A.Binary) and conj.op in ("<=", "<", ">", ">="):
                left_is_var = isinstance(conj.left, A.Ident) and conj.left.name == var
                right_is_var = isinstance(conj.right, A.Ident) and conj.right.name == var
                if right_is_var and conj.op == "<=":
                    lo = self.eval(st, conj.left, inner)
                    continue
                if left_is_var and conj.op == "<":
                    hi = self.eval(st, conj.right, inner)
                    continue
                if left_is_var and conj.op == ">=":
                    lo = self.eval(st, conj.right, inner)
                    continue
                if right_is_var and conj.op == ">":
                    hi = self.eval(st, conj.left, inner)
                    continue
            raise VerifyFailure(VerificationError(
                fa.span, Reason.CALL_UNSAFE, _pretty(fa),
                "quantified permission range must be lo <= v < hi"))
        if lo is None or hi is None:
            raise VerifyFailure(VerificationError(
                fa.span, Reason.CALL_UNSAFE, _pretty(fa),
                "quantified permission range must bound the variable"))
        return var, vterm, inner, lo, hi, fa.body.right

    def _conjuncts(self, e: A.Expr) -> list[A.Expr]:
        if isinstance(e, A.Binary) and e.op == "&&":
            return self._conjuncts(e.left) + self._conjuncts(e.right)
        return [e]

    def _produce_quantified(self, st: State, fa: A.Forall, scale: Perm,
                            env: Env, snap: Optional[SnapNode]) \
            -> tuple[State, SnapNode]:
        var, vterm, inner, lo, hi, target = self._quant_shape(st, fa, env)
        guard = tm.mk_and(tm.cmp_term("<=", lo, vterm), tm.cmp_term("<", vterm, hi))
        genv = inner.with_guard(guard)
        if isinstance(target, A.AccAssertion) and getattr(target, "acc_kind", "") == "loc":
            amt = amount_mul(self._amount(target.amount), scale)
            addr = target.target
            assert isinstance(addr, A.AddrOf) and isinstance(addr.target, A.Index)
            arr, abs_idx = self._quant_cell(st, addr.target, var, vterm, genv)
            abs_lo = tm.substitute(abs_idx, {vterm.name: lo})
            abs_hi = tm.substitute(abs_idx, {vterm.name: hi})
            vm = snap.vm if isinstance(snap, SnapMap) else self.fresh(tm.VMAP, "vm")
            self.add_cells_chunk(st, arr, abs_lo, abs_hi, amt, vm)
            return st, SnapMap(vm)
        # quantified predicate instances
        inst = target
        amt = scale
        if isinstance(inst, A.AccAssertion):
            amt = amount_mul(self._amount(inst.amount), scale)
            inst = inst.target
        key, args = self._instance_parts(st, inst, genv)
        st.heap.append(QPredChunk(key, vterm, lo, hi, tuple(args), amt))
        return st, SnapUnit()

    def _quant_cell(self, st: State, target: A.Index, var: str,
                    vterm: tm.Term, env: Env) -> tuple[tm.Term, tm.Term]:
        if not (isinstance(target.index, A.Ident) and target.index.name == var):
            raise VerifyFailure(VerificationError(
                target.span, Reason.CALL_UNSAFE, _pretty(target),
                "quantified index must be the bound variable"))
        return self._cell_target(st, target.base, vterm, env)

    def _instance_parts(self, st: State, inst: A.Expr, env: Env) \
            -> tuple[str, list[tm.Term]]:
        """A predicate instance expression -> (pred key, argument terms)."""
        if isinstance(inst, A.Call):
            kind = getattr(inst, "call_kind", "")
            if kind == "pred_instance":
                key = inst.pred_key                         # type: ignore[attr-defined]
                args: list[tm.Term] = []
                recv = getattr(inst, "recv_expr", None)
                if recv is not None:
                    rv = self.eval(st, recv, env)
                    if getattr(recv, "box_to", None):
                        rt = self.type_of(recv)
                        rv = self._convert(st, rv, rt,
                                           ty.InterfaceType(recv.box_to), recv.span)
                    args.append(rv)
                for a in inst.args:
                    args.append(self.eval(st, a, env))
                return key, args
            if kind == "predval_apply":
                pv = self.eval(st, inst.callee, env)
                hole_args = [self.eval(st, a, env) for a in inst.args]
                return self.resolve_predval(st, pv, hole_args, inst.span)
            if kind == "builtin":
                raise VerifyFailure(VerificationError(
                    inst.span, Reason.CALL_UNSAFE, _pretty(inst),
                    "builtin call is not a predicate instance"))
        raise VerifyFailure(VerificationError(
            inst.span, Reason.CALL_UNSAFE, _pretty(inst),
            "expected a predicate instance"))

    def resolve_predval(self, st: State, pv: tm.Term, hole_args: list[tm.Term],
                        span: SourceSpan) -> tuple[str, list[tm.Term]]:
        """Turn a predicate-value term applied to hole fillers into a concrete
        predicate instance, consulting the path condition if needed."""
        lit = self._resolve_predval_literal(st, pv, span)
        op = lit.op
        # pv!<pred dollar-separated>!<bound positions>
        assert op.startswith("pv!")
        rest = op[3:]
        parts = rest.split("!")
        mask = parts[-1]
        pred_key = "$".join(parts[:-1])
        bound = [] if mask == "none" else [int(x) for x in mask.split("_")]
        total = len(bound) + len(hole_args)
        args: list[Optional[tm.Term]] = [None] * total
        for pos, val in zip(bound, lit.args):
            args[pos] = val
        hole_iter = iter(hole_args)
        for i in range(total):
            if args[i] is None:
                args[i] = next(hole_iter)
        return pred_key, [a for a in args if a is not None]

    def _resolve_predval_literal(self, st: State, pv: tm.Term,
                                 span: SourceSpan) -> tm.Term:
        if pv.op.startswith("pv!"):
            return pv
        for params, template in self.predval_registry:
            if not params:
                if self.holds(st, tm.mk_eq(pv, template)):
                    return template
            else:
                # instantiate single-parameter templates by matching the
                # demanded term's shape is not possible; skip
                continue
        raise VerifyFailure(VerificationError(
            span, Reason.CALL_UNSAFE, "predicate value",
            "cannot resolve predicate value to a literal"))

    def register_predval(self, term: tm.Term) -> None:
        if term.op.startswith("pv!"):
            entry = ((), term)
            if entry not in self.predval_registry:
                self.predval_registry.append(entry)

    def _produce_acc(self, st: State, target: A.Expr, amt: Perm, env: Env,
                     snap: Optional[SnapNode], span: SourceSpan) \
            -> tuple[State, SnapNode]:
        if isinstance(target, A.AddrOf):
            if isinstance(target.target, A.Index):
                idx = self.eval(st, target.target.index, env)
                arr, abs_idx = self._cell_target(st, target.target, idx, env)
                vm = snap.vm if isinstance(snap, SnapMap) else self.fresh(tm.VMAP, "vm")
                self.add_cells_chunk(st, arr, abs_idx,
                                     tm.mk_add(abs_idx, tm.mk_int(1)), amt, vm)
                return st, SnapMap(vm)
            ref, fname, fsort = self._field_target(st, target.target, env)
            val = snap.val if isinstance(snap, SnapVal) else self.fresh(fsort, "v")
            self.add_field_chunk(st, ref, fname, fsort, val, amt)
            return st, SnapVal(val)
        # predicate instance
        key, args = self._instance_parts(st, target, env)
        return self.produce_pred(st, key, args, amt, snap, span)

    def produce_pred(self, st: State, key: str, args: list[tm.Term], amt: Perm,
                     snap: Optional[SnapNode], span: SourceSpan) \
            -> tuple[State, SnapNode]:
        token = snap.token if isinstance(snap, SnapPred) else SnapToken()
        self.conc.on_produce_pred(st, key, args, token)
        st.heap.append(PredChunk(key, tuple(args), amt, token))
        return st, SnapPred(token)

    def _field_target(self, st: State, lv: A.Expr, env: Env) \
            -> tuple[tm.Term, str, str]:
        """&lv for non-index lvalues -> (ref, field name, field sort)."""
        if isinstance(lv, A.FieldSel):
            base = self.eval(st, lv.base, env)
            return base, lv.field, self.sort_of(self.type_of(lv))
        if isinstance(lv, A.Ident):
            kind = self._shared_kind(lv.name)
            if kind == "cell":
                return st.store[lv.name], "$cell", self.sort_of(self.type_of(lv))
            raise VerifyFailure(VerificationError(
                lv.span, Reason.CALL_UNSAFE, _pretty(lv),
                "acc target must be a shared location"))
        if isinstance(lv, A.Deref):
            base = self.eval(st, lv.target, env)
            return base, "$cell", self.sort_of(self.type_of(lv))
        raise VerifyFailure(VerificationError(
            lv.span, Reason.CALL_UNSAFE, _pretty(lv), "unsupported acc target"))

    # ══ consume ══════════════════════════════════════════════════

    def consume(self, st: State, e: A.Expr, scale: Perm, env: Env,
                ctx: ErrCtx, eval_st: Optional[State] = None) \
            -> list[tuple[State, SnapNode]]:
        """Remove permissions demanded by e; evaluation happens against
        eval_st (defaults to the state at entry)."""
        if eval_st is None:
            eval_st = st.snapshot()
        if not _is_perm(e):
            term = self.eval(eval_st, e, env)
            result = self.prove(st, term)
            if result is not QueryResult.VALID:
                detail = ("solver timeout or incompleteness"
                          if result is QueryResult.UNKNOWN else "assertion may not hold")
                raise VerifyFailure(VerificationError(
                    ctx.site or e.span, self._bool_reason(ctx), _pretty(e), detail))
            st.assume(term)
            return [(st, SnapUnit())]
        if isinstance(e, A.Binary) and e.op == "&&":
            out: list[tuple[State, SnapNode]] = []
            for st1, s1 in self.consume(st, e.left, scale, env, ctx, eval_st):
                for st2, s2 in self.consume(st1, e.right, scale, env, ctx, eval_st):
                    out.append((st2, SnapAnd(s1, s2)))
            return out
        if isinstance(e, A.Binary) and e.op == "==>":
            cond = self.eval(eval_st, e.left, env)
            return self._consume_guarded(st, cond, e.right, scale, env, ctx, eval_st)
        if isinstance(e, A.Ternary):
            cond = self.eval(eval_st, e.cond, env)
            out = []
            for st1, s1 in self._consume_guarded(st, cond, e.then, scale, env,
                                                 ctx, eval_st):
                for st2, s2 in self._consume_guarded(st1, tm.mk_not(cond), e.other,
                                                     scale, env, ctx, eval_st):
                    out.append((st2, SnapAnd(s1, s2)))
            return out
        if isinstance(e, A.Forall):
            return [self._consume_quantified(st, e, scale, env, ctx, eval_st)]
        if isinstance(e, A.AccAssertion):
            amt = self._amount(e.amount)
            return [self._consume_acc(st, e.target, amount_mul(amt, scale),
                                      env, ctx, eval_st, e)]
        if isinstance(e, A.Call):
            return [self._consume_acc(st, e, scale, env, ctx, eval_st, e)]
        raise AssertionError(f"consume: unexpected assertion {type(e).__name__}")

    def _bool_reason(self, ctx: ErrCtx) -> Reason:
        if ctx.reason is Reason.INSUFFICIENT_PERMISSION:
            return Reason.ASSERTION_UNKNOWN
        return ctx.reason

    def _consume_guarded(self, st: State, cond: tm.Term, body: A.Expr,
                         scale: Perm, env: Env, ctx: ErrCtx, eval_st: State) \
            -> list[tuple[State, SnapNode]]:
        if self.holds(st, cond):
            return [(s, SnapGuard(sn)) for s, sn in
                    self.consume(st, body, scale, env, ctx, eval_st)]
        if self.holds(st, tm.mk_not(cond)):
            return [(st, SnapGuard(None))]
        out: list[tuple[State, SnapNode]] = []
        taken = st.clone()
        taken.assume(cond)
        if self.feasible(taken):
            for s, sn in self.consume(taken, body, scale, env, ctx, eval_st):
                out.append((s, SnapGuard(sn)))
        skipped = st.clone()
        skipped.assume(tm.mk_not(cond))
        if self.feasible(skipped):
            out.append((skipped, SnapGuard(None)))
        if not out:
            st.assume(tm.FALSE)
            out.append((st, SnapGuard(None)))
        return out

    def _consume_quantified(self, st: State, fa: A.Forall, scale: Perm,
                            env: Env, ctx: ErrCtx, eval_st: State) \
            -> tuple[State, SnapNode]:
        var, vterm, inner, lo, hi, target = self._quant_shape(eval_st, fa, env)
        guard = tm.mk_and(tm.cmp_term("<=", lo, vterm), tm.cmp_term("<", vterm, hi))
        genv = inner.with_guard(guard)
        if isinstance(target, A.AccAssertion) and getattr(target, "acc_kind", "") == "loc":
            amt = amount_mul(self._amount(target.amount), scale)
            addr = target.target
            assert isinstance(addr, A.AddrOf) and isinstance(addr.target, A.Index)
            arr, abs_idx = self._quant_cell(eval_st, addr.target, var, vterm, genv)
            abs_lo = tm.substitute(abs_idx, {vterm.name: lo})
            abs_hi = tm.substitute(abs_idx, {vterm.name: hi})
            vm = self._consume_cells(st, arr, abs_lo, abs_hi, amt, ctx, fa)
            return st, SnapMap(vm)
        inst = target
        amt = scale
        if isinstance(inst, A.AccAssertion):
            amt = amount_mul(self._amount(inst.amount), scale)
            inst = inst.target
        key, args = self._instance_parts(eval_st, inst, genv)
        self._consume_qpreds(st, key, vterm, lo, hi, args, amt, ctx, fa)
        return st, SnapUnit()

    def _consume_acc(self, st: State, target: A.Expr, amt: Perm, env: Env,
                     ctx: ErrCtx, eval_st: State, origin: A.Expr) \
            -> tuple[State, SnapNode]:
        if isinstance(target, A.AddrOf):
            if isinstance(target.target, A.Index):
                idx = self.eval(eval_st, target.target.index, env)
                arr, abs_idx = self._cell_target(eval_st, target.target, idx, env)
                vm = self._consume_cells(st, arr, abs_idx,
                                         tm.mk_add(abs_idx, tm.mk_int(1)),
                                         amt, ctx, origin)
                return st, SnapMap(vm)
            ref, fname, fsort = self._field_target(eval_st, target.target, env)
            val = self._consume_field(st, ref, fname, amt, ctx, origin)
            return st, SnapVal(val)
        key, args = self._instance_parts(eval_st, target, env)
        token = self.consume_pred(st, key, args, amt, ctx, origin)
        return st, SnapPred(token)

    def _consume_field(self, st: State, ref: tm.Term, fname: str, amt: Perm,
                       ctx: ErrCtx, origin: A.Expr) -> tm.Term:
        remaining = amt
        value: Optional[tm.Term] = None
        # wildcard demands prefer wildcard chunks so fractions stay intact
        ordered = sorted(
            (c for c in st.heap
             if isinstance(c, FieldChunk) and c.field == fname),
            key=lambda c: 0 if (amt.wildcard and c.amt.wildcard) else 1)
        for c in ordered:
            if not c.amt.is_positive():
                continue
            if not (c.ref == ref or self.holds(st, tm.mk_eq(ref, c.ref))):
                continue
            if value is None:
                value = c.val
            else:
                st.assume(tm.mk_eq(value, c.val))
            left = amount_sub(c.amt, remaining)
            if left is INSUFFICIENT:
                # take everything this chunk has and keep looking
                if c.amt.wildcard:
                    continue
                took = c.amt
                st.remove_chunk(c)
                rem2 = amount_sub(remaining, took)
                if rem2 is INSUFFICIENT:
                    continue
                remaining = rem2
                if remaining.is_zero():
                    break
                continue
            assert isinstance(left, Perm)
            if left.is_zero():
                st.remove_chunk(c)
            else:
                st.replace_chunk(c, with_amt(c, left))
            remaining = NONE
            break
        if value is None or (not remaining.is_zero() and not amt.wildcard) \
                or (amt.wildcard and remaining is not NONE and not remaining.is_zero()):
            raise VerifyFailure(ctx.error(origin, "insufficient permission"))
        return value

    def _consume_cells(self, st: State, arr: tm.Term, dlo: tm.Term, dhi: tm.Term,
                       amt: Perm, ctx: ErrCtx, origin: A.Expr) -> tm.Term:
        """Consume amt at every index of arr[dlo, dhi); returns a value map
        that agrees with the consumed cells."""
        result_vm = self.fresh(tm.VMAP, "cvm")
        work = [(dlo, dhi)]
        guard_rounds = 0
        while work:
            lo, hi = work.pop()
            if self.holds(st, tm.cmp_term("<=", hi, lo)):
                continue
            guard_rounds += 1
            if guard_rounds > 16:
                raise VerifyFailure(ctx.error(origin, "insufficient permission"))
            candidate = None
            for c in st.heap:
                if not isinstance(c, CellsChunk) or not c.amt.is_positive():
                    continue
                take = amount_sub(c.amt, amt)
                if take is INSUFFICIENT:
                    continue
                if self.holds(st, tm.mk_and(tm.mk_eq(arr, c.arr),
                                            tm.cmp_term("<=", c.lo, lo),
                                            tm.cmp_term("<=", hi, c.hi))):
                    candidate = (c, lo, hi, take)
                    break
                if candidate is None and self.holds(
                        st, tm.mk_and(tm.mk_eq(arr, c.arr),
                                      tm.cmp_term("<=", c.lo, lo),
                                      tm.cmp_term("<", lo, c.hi),
                                      tm.cmp_term("<", c.hi, hi))):
                    candidate = (c, lo, c.hi, take)
            if candidate is None:
                raise VerifyFailure(ctx.error(origin, "insufficient permission"))
            c, plo, phi, left = candidate
            assert isinstance(left, Perm)
            st.remove_chunk(c)
            keep_amt = c.amt
            if self._range_nonempty(st, c.lo, plo):
                self.add_cells_chunk(st, c.arr, c.lo, plo, keep_amt, c.vm)
            if self._range_nonempty(st, phi, c.hi):
                self.add_cells_chunk(st, c.arr, phi, c.hi, keep_amt, c.vm)
            if left.is_positive():
                self.add_cells_chunk(st, c.arr, plo, phi, left, c.vm)
            k = self.fresh_var("cv")
            st.assume(tm.mk_forall(
                [(k.name, tm.INT)],
                tm.mk_implies(tm.mk_and(tm.cmp_term("<=", plo, k),
                                        tm.cmp_term("<", k, phi)),
                              tm.mk_eq(tm.mk_select(result_vm, k),
                                       tm.mk_select(c.vm, k)))))
            if not (phi is hi or phi == hi):
                work.append((phi, hi))
        return result_vm

    def _range_nonempty(self, st: State, lo: tm.Term, hi: tm.Term) -> bool:
        # cheap syntactic check first; keep chunk when unsure
        if lo == hi:
            return False
        return not self.holds(st, tm.cmp_term("<=", hi, lo))

    def consume_pred(self, st: State, key: str, args: list[tm.Term], amt: Perm,
                     ctx: ErrCtx, origin: A.Expr) -> SnapToken:
        if key == B.BK_PREDTRUE:
            return SnapToken(SnapUnit())
        remaining = amt
        token: Optional[SnapToken] = None
        candidates: list[PredChunk] = []
        for c in st.heap:
            if isinstance(c, PredChunk) and c.key == key and c.amt.is_positive():
                candidates.append(c)
        candidates.sort(key=lambda c: 0 if (amt.wildcard and c.amt.wildcard) else 1)
        for c in candidates:
            if not self._args_match(st, c.args, args):
                continue
            token = token or c.token
            left = amount_sub(c.amt, remaining)
            if left is INSUFFICIENT:
                if c.amt.wildcard:
                    continue
                st.remove_chunk(c)
                rem2 = amount_sub(remaining, c.amt)
                if rem2 is INSUFFICIENT:
                    continue
                remaining = rem2
                continue
            assert isinstance(left, Perm)
            if left.is_zero():
                st.remove_chunk(c)
            else:
                st.replace_chunk(c, with_amt(c, left))
            remaining = NONE
            break
        if token is not None and remaining.is_zero():
            return token
        # single instances can come out of quantified chunks
        extracted = self._extract_from_qpred(st, key, args, remaining)
        if extracted is not None:
            return extracted
        raise VerifyFailure(ctx.error(origin, "insufficient permission"))

    def _args_match(self, st: State, held: tuple[tm.Term, ...],
                    want: list[tm.Term]) -> bool:
        if len(held) != len(want):
            return False
        if all(h == w for h, w in zip(held, want)):
            return True
        goal = tm.mk_and(*[self.values_equal(h, w) for h, w in zip(held, want)])
        return self.holds(st, goal)

    def _extract_from_qpred(self, st: State, key: str, args: list[tm.Term],
                            amt: Perm) -> Optional[SnapToken]:
        for c in st.heap:
            if not isinstance(c, QPredChunk) or c.key != key:
                continue
            left = amount_sub(c.amt, amt)
            if left is INSUFFICIENT:
                continue
            idpos = self._identity_position(c)
            if idpos is None:
                continue
            idx = args[idpos]
            inst_args = c.args_at(idx)
            if not self._args_match(st, inst_args, args):
                continue
            if not self.holds(st, tm.mk_and(tm.cmp_term("<=", c.lo, idx),
                                            tm.cmp_term("<", idx, c.hi))):
                continue
            token = c.token_at(idx)
            st.remove_chunk(c)
            assert isinstance(left, Perm)
            if self._range_nonempty(st, c.lo, idx):
                st.heap.append(QPredChunk(c.key, c.var, c.lo, idx, c.args,
                                          c.amt, c.fam))
            hi_lo = tm.mk_add(idx, tm.mk_int(1))
            if self._range_nonempty(st, hi_lo, c.hi):
                st.heap.append(QPredChunk(c.key, c.var, hi_lo, c.hi, c.args,
                                          c.amt, c.fam))
            if left.is_positive():
                st.heap.append(QPredChunk(c.key, c.var, idx, hi_lo, c.args,
                                          left, c.fam))
            return token
        return None

    def _identity_position(self, c: QPredChunk) -> Optional[int]:
        for i, a in enumerate(c.args):
            if a == c.var:
                return i
        return None

    def _consume_qpreds(self, st: State, key: str, vterm: tm.Term, dlo: tm.Term,
                        dhi: tm.Term, args: list[tm.Term], amt: Perm,
                        ctx: ErrCtx, origin: A.Expr) -> None:
        work = [(dlo, dhi)]
        rounds = 0
        while work:
            lo, hi = work.pop()
            if self.holds(st, tm.cmp_term("<=", hi, lo)):
                continue
            rounds += 1
            if rounds > 16:
                raise VerifyFailure(ctx.error(origin, "insufficient permission"))
            # whole or prefix cover by another quantified chunk
            covered = False
            for c in st.heap:
                if not isinstance(c, QPredChunk) or c.key != key:
                    continue
                left = amount_sub(c.amt, amt)
                if left is INSUFFICIENT:
                    continue
                sub = {vterm.name: c.var}
                want = [tm.substitute(a, sub) for a in args]
                k = c.var
                rng = tm.mk_and(tm.cmp_term("<=", tm.substitute(lo, {}), k)
                                if False else tm.cmp_term("<=", lo, k),
                                tm.cmp_term("<", k, hi),
                                tm.cmp_term("<=", c.lo, k), tm.cmp_term("<", k, c.hi))
                matches = tm.mk_forall(
                    [(k.name, tm.INT)],
                    tm.mk_implies(rng, tm.mk_and(
                        *[self.values_equal(h, w) for h, w in zip(c.args, want)])))
                if not self.holds(st, matches):
                    continue
                if self.holds(st, tm.mk_and(tm.cmp_term("<=", c.lo, lo),
                                            tm.cmp_term("<=", hi, c.hi))):
                    self._split_qpred(st, c, lo, hi, left)
                    covered = True
                    break
                if self.holds(st, tm.mk_and(tm.cmp_term("<=", c.lo, lo),
                                            tm.cmp_term("<", lo, c.hi),
                                            tm.cmp_term("<", c.hi, hi))):
                    self._split_qpred(st, c, lo, c.hi, left)
                    work.append((c.hi, hi))
                    covered = True
                    break
            if covered:
                continue
            # single chunk matching the next demanded index
            single = None
            for c in st.heap:
                if not isinstance(c, PredChunk) or c.key != key \
                        or not c.amt.is_positive():
                    continue
                left = amount_sub(c.amt, amt)
                if left is INSUFFICIENT:
                    continue
                want = [tm.substitute(a, {vterm.name: lo}) for a in args]
                if self._args_match(st, tuple(c.args), want):
                    single = (c, left)
                    break
            if single is None:
                raise VerifyFailure(ctx.error(origin, "insufficient permission"))
            c, left = single
            assert isinstance(left, Perm)
            if left.is_zero():
                st.remove_chunk(c)
            else:
                st.replace_chunk(c, with_amt(c, left))
            work.append((tm.mk_add(lo, tm.mk_int(1)), hi))

    def _split_qpred(self, st: State, c: QPredChunk, lo: tm.Term, hi: tm.Term,
                     left: Perm) -> None:
        st.remove_chunk(c)
        if self._range_nonempty(st, c.lo, lo):
            st.heap.append(QPredChunk(c.key, c.var, c.lo, lo, c.args, c.amt, c.fam))
        if self._range_nonempty(st, hi, c.hi):
            st.heap.append(QPredChunk(c.key, c.var, hi, c.hi, c.args, c.amt, c.fam))
        if left.is_positive():
            st.heap.append(QPredChunk(c.key, c.var, lo, hi, c.args, left, c.fam))
