"""Demand-driven SMT theory for a typechecked program.

Declares the mathematical value model (interface pairs, slices, sequences,
defunctionalized predicate values, boxing into a Poly carrier) and the
quantified axioms with explicit triggers. Emission is deterministic: the
same program yields byte-identical preamble text.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast_nodes as A
from . import builtins_def as B
from . import terms as tm
from . import types as ty
from .typecheck import ProgramInfo, type_key


@dataclass
class Theory:
    info: Optional[ProgramInfo]
    seq_sorts: set[str] = field(default_factory=set)
    box_sorts: set[str] = field(default_factory=set)
    type_consts: set[str] = field(default_factory=set)   # mangled type names
    # pred constructor: (pred_key, bound positions) -> (ctor name, field sorts)
    predval_ctors: dict[tuple[str, tuple[int, ...]], tuple[str, tuple[str, ...]]] = \
        field(default_factory=dict)
    structs: dict[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)
    need_slice: bool = False
    need_iface: bool = False
    need_addr: bool = False
    need_chan_fns: bool = False

    # ── sorts ────────────────────────────────────────────────────

    def sort_of(self, t: ty.TypeRepr) -> str:
        if isinstance(t, ty.IntType):
            return tm.INT
        if isinstance(t, ty.BoolType):
            return tm.BOOL
        if isinstance(t, ty.PointerType):
            return tm.REF
        if isinstance(t, (ty.BuiltinType, ty.ChanType)):
            return tm.REF
        if isinstance(t, ty.StructType):
            return f"Tup!{t.name}"
        if isinstance(t, ty.ArrayType):
            return tm.seq_sort(self.sort_of(t.elem))
        if isinstance(t, ty.SliceType):
            return tm.SLICE
        if isinstance(t, ty.InterfaceType):
            return tm.IFACE
        if isinstance(t, ty.SeqType):
            return tm.seq_sort(self.sort_of(t.elem))
        if isinstance(t, ty.PredValType):
            return tm.PREDV
        if isinstance(t, ty.TypeValType):
            return tm.TYPEC
        raise AssertionError(f"no SMT sort for {t}")

    def register_type(self, t: ty.TypeRepr) -> None:
        if isinstance(t, ty.PointerType):
            self.register_type(t.elem)
            return
        if isinstance(t, (ty.SliceType, ty.ArrayType)):
            self.need_slice = True
            self.need_addr = True
            elem = self.sort_of(t.elem)
            self.box_sorts.add(elem)
            if isinstance(t, ty.ArrayType):
                self.seq_sorts.add(tm.seq_sort(elem))
            self.register_type(t.elem)
            return
        if isinstance(t, ty.SeqType):
            self.register_type(t.elem)
            self.seq_sorts.add(self.sort_of(t))
            return
        if isinstance(t, ty.InterfaceType):
            self.need_iface = True
            return
        if isinstance(t, ty.ChanType):
            self.need_chan_fns = True
            self.register_type(t.elem)
            return
        if isinstance(t, ty.PredValType):
            for p in t.params:
                self.register_type(p)
            return

    # ── type constants ───────────────────────────────────────────

    def type_const(self, t: ty.TypeRepr) -> tm.Term:
        name = "T!" + type_key(t).replace("*", "ptr!").replace(".", "!")
        self.type_consts.add(name)
        return tm.app(name, tm.TYPEC)

    # ── predicate value constructors ─────────────────────────────

    def predval_ctor(self, pred_key: str, bound: tuple[int, ...],
                     field_sorts: tuple[str, ...]) -> str:
        key = (pred_key, bound)
        if key not in self.predval_ctors:
            mask = "_".join(str(i) for i in bound) or "none"
            name = f"pv!{pred_key.replace('$', '!')}!{mask}"
            self.predval_ctors[key] = (name, field_sorts)
        return self.predval_ctors[key][0]

    # ── term builders over theory functions ──────────────────────

    def box(self, t: tm.Term) -> tm.Term:
        if t.sort == tm.POLY:
            return t
        self.box_sorts.add(t.sort)
        return tm.app(f"box!{tm.mangle(t.sort)}", tm.POLY, t)

    def unbox(self, t: tm.Term, sort: str) -> tm.Term:
        if sort == tm.POLY:
            return t
        self.box_sorts.add(sort)
        if t.op == f"box!{tm.mangle(sort)}":
            return t.args[0]
        return tm.app(f"unbox!{tm.mangle(sort)}", sort, t)

    def seq_len(self, s: tm.Term) -> tm.Term:
        return tm.app(f"seqlen!{s.sort}", tm.INT, s)

    def seq_idx(self, s: tm.Term, i: tm.Term) -> tm.Term:
        return tm.app(f"seqidx!{s.sort}", tm.seq_elem_sort(s.sort), s, i)

    def seq_concat(self, a: tm.Term, b: tm.Term) -> tm.Term:
        return tm.app(f"seqcat!{a.sort}", a.sort, a, b)

    def seq_unit(self, elem: tm.Term, sort: str) -> tm.Term:
        self.seq_sorts.add(sort)
        return tm.app(f"sequnit!{sort}", sort, elem)

    def seq_empty(self, sort: str) -> tm.Term:
        self.seq_sorts.add(sort)
        return tm.app(f"seqempty!{sort}", sort)

    def seq_eq(self, a: tm.Term, b: tm.Term) -> tm.Term:
        return tm.app(f"seqeq!{a.sort}", tm.BOOL, a, b)

    def slice_mk(self, arr: tm.Term, off: tm.Term, length: tm.Term) -> tm.Term:
        self.need_slice = True
        return tm.app("slice!mk", tm.SLICE, arr, off, length)

    def slice_arr(self, s: tm.Term) -> tm.Term:
        if s.op == "slice!mk":
            return s.args[0]
        return tm.app("slice!arr", tm.REF, s)

    def slice_off(self, s: tm.Term) -> tm.Term:
        if s.op == "slice!mk":
            return s.args[1]
        return tm.app("slice!off", tm.INT, s)

    def slice_len(self, s: tm.Term) -> tm.Term:
        if s.op == "slice!mk":
            return s.args[2]
        return tm.app("slice!len", tm.INT, s)

    def iface_mk(self, tyc: tm.Term, payload: tm.Term) -> tm.Term:
        self.need_iface = True
        return tm.app("iface!mk", tm.IFACE, tyc, payload)

    def iface_ty(self, v: tm.Term) -> tm.Term:
        if v.op == "iface!mk":
            return v.args[0]
        return tm.app("iface!ty", tm.TYPEC, v)

    def iface_val(self, v: tm.Term) -> tm.Term:
        if v.op == "iface!mk":
            return v.args[1]
        return tm.app("iface!val", tm.POLY, v)

    def addr_mk(self, ref: tm.Term, idx: tm.Term) -> tm.Term:
        self.need_addr = True
        return tm.app("addr!mk", tm.ADDR, ref, idx)

    def tup_mk(self, struct: str, *fields: tm.Term) -> tm.Term:
        return tm.app(f"tup!{struct}", f"Tup!{struct}", *fields)

    def tup_proj(self, struct: str, fname: str, fsort: str, v: tm.Term) -> tm.Term:
        return tm.app(f"tup!{struct}!{fname}", fsort, v)

    def chan_fn(self, which: str, c: tm.Term) -> tm.Term:
        self.need_chan_fns = True
        return tm.app(f"chan!{which}", tm.PREDV, c)

    # ── emission ─────────────────────────────────────────────────

    def emit(self) -> str:
        out: list[str] = []
        out.append("(set-option :print-success false)")
        out.append("(set-option :smt.mbqi false)")
        out.append("(set-option :smt.qi.eager_threshold 80)")
        out.append("(set-option :smt.random-seed 0)")
        out.append("(set-option :smt.delay_units true)")
        out.append("; sorts")
        out.append("(declare-sort Poly 0)")
        out.append("(declare-sort Ref 0)")
        for s in sorted(self.seq_sorts):
            out.append(f"(declare-sort {s} 0)")
        # type constants datatype (distinct by construction)
        consts = sorted(self.type_consts | {"T!int", "T!bool"})
        ctors = " ".join(f"({c})" for c in consts)
        out.append(f"(declare-datatypes ((TypeC 0)) (({ctors})))")
        if self.need_slice:
            out.append("(declare-datatypes ((Slice 0)) "
                       "(((slice!mk (slice!arr Ref) (slice!off Int) (slice!len Int)))))")
        if self.need_addr:
            out.append("(declare-datatypes ((Addr 0)) "
                       "(((addr!mk (addr!ref Ref) (addr!idx Int)))))")
        if self.need_iface:
            out.append("(declare-datatypes ((IFace 0)) "
                       "(((iface!mk (iface!ty TypeC) (iface!val Poly)))))")
        for name in sorted(self.structs):
            fields = self.structs[name]
            decl = " ".join(f"(tup!{name}!{fn} {fs})" for fn, fs in fields)
            out.append(f"(declare-datatypes ((Tup!{name} 0)) (((tup!{name} {decl}))))")
        if self.predval_ctors:
            pieces = []
            for (pkey, bound) in sorted(self.predval_ctors):
                name, sorts = self.predval_ctors[(pkey, bound)]
                fields = " ".join(f"({name}!a{i} {s})" for i, s in enumerate(sorts))
                pieces.append(f"({name} {fields})" if sorts else f"({name})")
            out.append(f"(declare-datatypes ((PredV 0)) (({' '.join(pieces)})))")
        out.append("; functions")
        for s in sorted(self.box_sorts):
            m = tm.mangle(s)
            out.append(f"(declare-fun box!{m} ({s}) Poly)")
            out.append(f"(declare-fun unbox!{m} (Poly) {s})")
        for s in sorted(self.seq_sorts):
            elem = tm.seq_elem_sort(s)
            out.append(f"(declare-fun seqlen!{s} ({s}) Int)")
            out.append(f"(declare-fun seqidx!{s} ({s} Int) {elem})")
            out.append(f"(declare-fun seqcat!{s} ({s} {s}) {s})")
            out.append(f"(declare-fun sequnit!{s} ({elem}) {s})")
            out.append(f"(declare-fun seqempty!{s} () {s})")
            out.append(f"(declare-fun seqeq!{s} ({s} {s}) Bool)")
        if self.need_chan_fns:
            for which in ("SendGiven", "SendGot", "RecvGiven", "RecvGot"):
                out.append(f"(declare-fun chan!{which} (Ref) PredV)")
        out.append("; axioms")
        for s in sorted(self.box_sorts):
            m = tm.mangle(s)
            out.append(f"(assert (forall ((x {s})) "
                       f"(! (= (unbox!{m} (box!{m} x)) x) :pattern ((box!{m} x)))))")
        for s in sorted(self.seq_sorts):
            elem = tm.seq_elem_sort(s)
            out.extend([
                # length nonnegative; empty and unit lengths
                f"(assert (forall ((s {s})) (! (>= (seqlen!{s} s) 0) "
                f":pattern ((seqlen!{s} s)))))",
                f"(assert (= (seqlen!{s} seqempty!{s}) 0))",
                f"(assert (forall ((x {elem})) (! (= (seqlen!{s} (sequnit!{s} x)) 1) "
                f":pattern ((sequnit!{s} x)))))",
                f"(assert (forall ((x {elem}) (i Int)) "
                f"(! (= (seqidx!{s} (sequnit!{s} x) i) x) "
                f":pattern ((seqidx!{s} (sequnit!{s} x) i)))))",
                # concatenation laws
                f"(assert (forall ((a {s}) (b {s})) "
                f"(! (= (seqlen!{s} (seqcat!{s} a b)) "
                f"(+ (seqlen!{s} a) (seqlen!{s} b))) :pattern ((seqcat!{s} a b)))))",
                f"(assert (forall ((a {s}) (b {s}) (i Int)) "
                f"(! (=> (and (<= 0 i) (< i (seqlen!{s} a))) "
                f"(= (seqidx!{s} (seqcat!{s} a b) i) (seqidx!{s} a i))) "
                f":pattern ((seqidx!{s} (seqcat!{s} a b) i)))))",
                f"(assert (forall ((a {s}) (b {s}) (i Int)) "
                f"(! (=> (<= (seqlen!{s} a) i) "
                f"(= (seqidx!{s} (seqcat!{s} a b) i) "
                f"(seqidx!{s} b (- i (seqlen!{s} a))))) "
                f":pattern ((seqidx!{s} (seqcat!{s} a b) i)))))",
                # pointwise equality (extensionality marker)
                f"(assert (forall ((a {s}) (b {s})) "
                f"(! (= (seqeq!{s} a b) (and (= (seqlen!{s} a) (seqlen!{s} b)) "
                f"(forall ((i Int)) (! (=> (and (<= 0 i) (< i (seqlen!{s} a))) "
                f"(= (seqidx!{s} a i) (seqidx!{s} b i))) "
                f":pattern ((seqidx!{s} a i)))))) :pattern ((seqeq!{s} a b)))))",
                f"(assert (forall ((a {s}) (b {s})) "
                f"(! (=> (seqeq!{s} a b) (= a b)) :pattern ((seqeq!{s} a b)))))",
            ])
        return "\n".join(out) + "\n"


def _walk_exprs(node: object, visit) -> None:
    if isinstance(node, (A.Expr, A.Stmt, A.Decl, A.Program, A.Block,
                         A.SpecClauses, A.AccAssertion)):
        if isinstance(node, A.Expr):
            visit(node)
        for value in vars(node).items():
            _walk_exprs(value[1], visit)
    elif isinstance(node, list):
        for item in node:
            _walk_exprs(item, visit)


def build_theory(info: ProgramInfo) -> Theory:
    """Collect the sorts, constructors, and constants a program needs."""
    theory = Theory(info)

    for name, fields in sorted(info.structs.items()):
        theory.structs[name] = tuple((fn, theory.sort_of(ft)) for fn, ft in fields)
        theory.type_const(ty.StructType(name))
        theory.type_const(ty.PointerType(ty.StructType(name)))
        for _, ft in fields:
            theory.register_type(ft)
    for name in sorted(info.interfaces):
        theory.need_iface = True
        itf_info = info.interfaces[name]
        for sig in itf_info.methods.values():
            for p in sig.params + sig.results:
                t = getattr(p, "ty", None)
                if t is not None:
                    theory.register_type(t)

    def visit(e: A.Expr) -> None:
        t = getattr(e, "ty", None)
        if t is not None:
            try:
                theory.register_type(t)
            except AssertionError:
                pass
        if isinstance(e, A.PartialApp) and getattr(e, "papp_kind", "") == "predval":
            params = e.param_types                        # type: ignore[attr-defined]
            holes = set(e.holes)                          # type: ignore[attr-defined]
            bound = tuple(i for i in range(len(params)) if i not in holes)
            sorts = tuple(theory.sort_of(params[i]) for i in bound)
            theory.predval_ctor(e.pred_key, bound, sorts)  # type: ignore[attr-defined]
        if isinstance(e, A.TypeAssert):
            theory.type_const(e.asserted)                 # type: ignore[attr-defined]
        if hasattr(e, "as_type"):
            theory.type_const(e.as_type)                  # type: ignore[attr-defined]

    _walk_exprs(info.program, visit)

    for decl in info.funcs.values():
        for p in decl.params + decl.results:
            t = getattr(p, "ty", None)
            if t is not None:
                theory.register_type(t)
    for decl in info.methods.values():
        for p in decl.params + decl.results:
            t = getattr(p, "ty", None)
            if t is not None:
                theory.register_type(t)

    if info.has_sync:
        theory.predval_ctor(B.BK_PREDTRUE, (), ())
    # interface payloads and dynamic-type constants for implementations
    for _, src, _ in info.obligations:
        theory.register_type(src)
        theory.type_const(src)
        theory.box_sorts.add(theory.sort_of(src))
    return theory
