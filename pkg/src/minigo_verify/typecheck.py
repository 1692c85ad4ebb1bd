"""Name resolution and type checking for annotated MiniGo.

Beyond Go-subset typing this enforces the specification discipline: ghost
state cannot flow into executable code, pure functions are side-effect
free single-return functions, `old` appears only in postconditions and
loop invariants, shared locations carry the `@` marker, and implementation
proofs have the required syntactic shape.

Checked expressions are annotated in place: `.ty` carries the TypeRepr,
calls carry `.call_kind`/resolution attributes consumed by the engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import ast_nodes as A
from . import builtins_def as B
from . import types as ty
from .errors import SpecError, TypecheckError
from .source import SourceSpan


# ── symbol tables ─────────────────────────────────────────────────


@dataclass
class InterfaceInfo:
    name: str
    decl: A.TypeDecl
    preds: dict[str, A.PredSig]
    methods: dict[str, A.MethodSig]


@dataclass
class ProgramInfo:
    program: A.Program
    structs: dict[str, list[tuple[str, ty.TypeRepr]]] = field(default_factory=dict)
    interfaces: dict[str, InterfaceInfo] = field(default_factory=dict)
    funcs: dict[str, A.FuncDecl] = field(default_factory=dict)
    methods: dict[tuple[str, str], A.FuncDecl] = field(default_factory=dict)
    preds: dict[str, A.PredDecl] = field(default_factory=dict)
    recv_preds: dict[tuple[str, str], A.PredDecl] = field(default_factory=dict)
    impl_proofs: dict[tuple[str, str], A.ImplProofDecl] = field(default_factory=dict)
    # (span, impl type, interface name) pairs needing an implementation proof
    obligations: list[tuple[SourceSpan, ty.TypeRepr, str]] = field(default_factory=list)
    diagnostics: list[TypecheckError] = field(default_factory=list)
    # per function/method: declared-@ locals (engine allocates those as shared)
    has_sync: bool = False

    def struct_fields(self, name: str) -> list[tuple[str, ty.TypeRepr]]:
        return self.structs[name]

    def field_type(self, struct: str, fname: str) -> Optional[ty.TypeRepr]:
        for n, t in self.structs.get(struct, []):
            if n == fname:
                return t
        return None


def type_key(t: ty.TypeRepr) -> str:
    """Canonical key for receiver types: counter, *counter, ..."""
    if isinstance(t, ty.PointerType):
        return "*" + type_key(t.elem)
    return str(t)


def pred_key_top(name: str) -> str:
    return f"p${name}"


def pred_key_recv(recv_key: str, name: str) -> str:
    return f"rp${recv_key}${name}"


def pred_key_iface(itf: str, name: str) -> str:
    return f"ip${itf}${name}"


# ── checker ───────────────────────────────────────────────────────


@dataclass
class _Local:
    type: ty.TypeRepr
    ghost: bool
    shared: bool
    span: SourceSpan
    is_array_decl: bool = False
    needs_shared: Optional[str] = None   # reason, filled on demand


class _FuncCtx:
    def __init__(self, decl: A.FuncDecl, proof_for: Optional[tuple[str, str]] = None):
        self.decl = decl
        self.proof_for = proof_for
        self.scopes: list[dict[str, _Local]] = [{}]
        self.result_names: set[str] = set()

    def push(self) -> None:
        self.scopes.append({})

    def pop(self) -> None:
        self.scopes.pop()

    def lookup(self, name: str) -> Optional[_Local]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare(self, name: str, local: _Local) -> None:
        self.scopes[-1][name] = local

    def all_locals(self) -> dict[str, _Local]:
        merged: dict[str, _Local] = {}
        for scope in self.scopes:
            merged.update(scope)
        return merged


class Checker:
    def __init__(self, program: A.Program, lenient_shared: bool = False) -> None:
        self.program = program
        self.lenient = lenient_shared
        self.info = ProgramInfo(program)
        self.errors: list[TypecheckError] = []
        self.warnings: list[str] = []
        self.ctx: Optional[_FuncCtx] = None
        self.ghost_depth = 0
        self.spec_depth = 0          # inside requires/ensures/invariant/pred/assert
        self.old_allowed = False
        self.pure_ctx = False
        self._root_locals: dict[str, _Local] = {}

    # ── entry point ──────────────────────────────────────────────

    def run(self) -> ProgramInfo:
        self._collect_decls()
        for decl in self.program.decls:
            try:
                if isinstance(decl, A.FuncDecl):
                    self._check_func(decl)
                elif isinstance(decl, A.PredDecl):
                    self._check_pred(decl)
                elif isinstance(decl, A.ImplProofDecl):
                    self._check_proof_decl(decl)
            except TypecheckError as err:
                self.errors.append(err)
        self.info.diagnostics = self.errors
        if self.errors:
            raise self.errors[0]
        return self.info

    def _err(self, span: SourceSpan, msg: str) -> TypecheckError:
        return TypecheckError(span, msg)

    # ── declaration collection ───────────────────────────────────

    def _collect_decls(self) -> None:
        info = self.info
        info.has_sync = "sync" in self.program.imports
        for imp in self.program.imports:
            if imp != "sync":
                self.errors.append(self._err(self.program.span,
                                             f'only import "sync" is supported, got "{imp}"'))
        for decl in self.program.decls:
            if isinstance(decl, A.TypeDecl):
                if decl.name in info.structs or decl.name in info.interfaces:
                    self.errors.append(self._err(decl.span, f"duplicate type {decl.name}"))
                    continue
                if isinstance(decl.underlying, A.StructType):
                    info.structs[decl.name] = []  # filled after all names known
                elif isinstance(decl.underlying, A.InterfaceType):
                    itf = decl.underlying
                    info.interfaces[decl.name] = InterfaceInfo(
                        decl.name, decl,
                        {p.name: p for p in itf.preds},
                        {m.name: m for m in itf.methods})
                else:
                    self.errors.append(self._err(
                        decl.span, "only struct and interface type declarations are supported"))
        # second pass: resolve struct field types, function/pred tables
        for decl in self.program.decls:
            if isinstance(decl, A.TypeDecl) and isinstance(decl.underlying, A.StructType):
                fields: list[tuple[str, ty.TypeRepr]] = []
                seen: set[str] = set()
                for fname, ftype in decl.underlying.fields:
                    if fname in seen:
                        self.errors.append(self._err(decl.span,
                                                     f"duplicate field {fname}"))
                    seen.add(fname)
                    fields.append((fname, self.resolve_type(ftype)))
                info.structs[decl.name] = fields
            elif isinstance(decl, A.FuncDecl):
                if decl.receiver is None:
                    if decl.name in info.funcs:
                        self.errors.append(self._err(decl.span,
                                                     f"duplicate function {decl.name}"))
                    info.funcs[decl.name] = decl
                else:
                    rkey = type_key(self.resolve_type(decl.receiver.type))
                    key = (rkey, decl.name)
                    if key in info.methods:
                        self.errors.append(self._err(
                            decl.span, f"duplicate method {rkey}.{decl.name}"))
                    info.methods[key] = decl
            elif isinstance(decl, A.PredDecl):
                if decl.receiver is None:
                    if decl.name in info.preds or decl.name == B.PRED_TRUE:
                        self.errors.append(self._err(decl.span,
                                                     f"duplicate predicate {decl.name}"))
                    info.preds[decl.name] = decl
                else:
                    rkey = type_key(self.resolve_type(decl.receiver.type))
                    key = (rkey, decl.name)
                    if key in info.recv_preds:
                        self.errors.append(self._err(
                            decl.span, f"duplicate predicate {rkey}.{decl.name}"))
                    info.recv_preds[key] = decl
            elif isinstance(decl, A.ImplProofDecl):
                impl = self.resolve_type(decl.impl_type)
                itf = self.resolve_type(decl.itf_type)
                if not isinstance(itf, ty.InterfaceType) or itf.empty:
                    self.errors.append(self._err(decl.span,
                                                 "implements target must be a named interface"))
                    continue
                key = (type_key(impl), itf.name)
                if key in info.impl_proofs:
                    self.errors.append(self._err(
                        decl.span, f"duplicate implementation proof {key[0]} implements {key[1]}"))
                info.impl_proofs[key] = decl
                decl.impl_repr = impl                      # type: ignore[attr-defined]
                decl.itf_name = itf.name                   # type: ignore[attr-defined]

    # ── type resolution ──────────────────────────────────────────

    def resolve_type(self, t: A.TypeExpr) -> ty.TypeRepr:
        if isinstance(t, A.NamedType):
            if t.name == "int":
                return ty.INT
            if t.name == "bool":
                return ty.BOOL
            if t.name == "sync.WaitGroup":
                if not self.info.has_sync:
                    raise self._err(t.span, 'sync.WaitGroup requires import "sync"')
                return ty.WAITGROUP
            if t.name in self.info.structs:
                return ty.StructType(t.name)
            if t.name in self.info.interfaces:
                return ty.InterfaceType(t.name)
            raise self._err(t.span, f"unknown type {t.name}")
        if isinstance(t, A.PointerType):
            return ty.PointerType(self.resolve_type(t.elem))
        if isinstance(t, A.ArrayType):
            if t.length < 0:
                raise self._err(t.span, "array length must be nonnegative")
            return ty.ArrayType(t.length, self.resolve_type(t.elem))
        if isinstance(t, A.SliceType):
            return ty.SliceType(self.resolve_type(t.elem))
        if isinstance(t, A.ChanType):
            return ty.ChanType(self.resolve_type(t.elem), t.direction)
        if isinstance(t, A.SeqType):
            return ty.SeqType(self.resolve_type(t.elem))
        if isinstance(t, A.PredType):
            return ty.PredValType(tuple(self.resolve_type(p) for p in t.params))
        if isinstance(t, A.InterfaceType):
            if not t.preds and not t.methods:
                return ty.EMPTY_INTERFACE
            raise self._err(t.span, "anonymous non-empty interface types are not supported")
        if isinstance(t, A.StructType):
            raise self._err(t.span, "anonymous struct types are not supported")
        raise self._err(t.span, f"unsupported type expression {t!r}")

    # ── structural subtyping ─────────────────────────────────────

    def method_set(self, t: ty.TypeRepr) -> dict[str, A.FuncDecl]:
        """Go method set restricted to the subset: *T sees T and *T receivers."""
        result: dict[str, A.FuncDecl] = {}
        keys = [type_key(t)]
        if isinstance(t, ty.PointerType):
            keys.append(type_key(t.elem))
        for (rkey, name), decl in self.info.methods.items():
            if rkey in keys:
                result[name] = decl
        return result

    def implements(self, t: ty.TypeRepr, itf_name: str) -> dict[str, Optional[str]]:
        """Per interface method: the matching concrete method name, or None."""
        itf = self.info.interfaces[itf_name]
        mset = self.method_set(t)
        report: dict[str, Optional[str]] = {}
        for name, sig in itf.methods.items():
            impl = mset.get(name)
            if impl is None:
                report[name] = None
                continue
            ok = (impl.pure == sig.pure
                  and [self.resolve_type(p.type) for p in impl.params]
                  == [self.resolve_type(p.type) for p in sig.params]
                  and [self.resolve_type(r.type) for r in impl.results]
                  == [self.resolve_type(r.type) for r in sig.results])
            report[name] = name if ok else None
        return report

    def _require_implements(self, span: SourceSpan, src: ty.TypeRepr,
                            itf_name: str) -> None:
        report = self.implements(src, itf_name)
        missing = sorted(n for n, m in report.items() if m is None)
        if missing:
            raise self._err(span, f"{src} does not implement {itf_name}: "
                                  f"missing {', '.join(missing)}")
        self.info.obligations.append((span, src, itf_name))

    # ── assignability ────────────────────────────────────────────

    def assignable(self, span: SourceSpan, src: ty.TypeRepr,
                   dst: ty.TypeRepr) -> None:
        if src == dst:
            return
        if (isinstance(src, ty.ChanType) and isinstance(dst, ty.ChanType)
                and src.elem == dst.elem and src.direction == "both"):
            return
        if isinstance(dst, ty.InterfaceType):
            if isinstance(src, ty.InterfaceType):
                if dst.empty:
                    return
                raise self._err(span, f"cannot assign {src} to {dst}")
            if src.is_ghost():
                raise self._err(span, f"ghost value of type {src} cannot enter an interface")
            if dst.empty:
                return
            self._require_implements(span, src, dst.name)
            return
        raise self._err(span, f"cannot use {src} as {dst}")

    # ── function checking ────────────────────────────────────────

    def _declare_params(self, ctx: _FuncCtx, decl: A.FuncDecl) -> None:
        if decl.receiver is not None:
            rt = self.resolve_type(decl.receiver.type)
            decl.receiver.ty = rt                       # type: ignore[attr-defined]
            if decl.receiver.name:
                ctx.declare(decl.receiver.name,
                            _Local(rt, decl.ghost, False, decl.receiver.span))
        for p in decl.params:
            pt = self.resolve_type(p.type)
            p.ty = pt                                   # type: ignore[attr-defined]
            if p.name:
                ctx.declare(p.name, _Local(pt, decl.ghost or pt.is_ghost(),
                                           False, p.span))
        for r in decl.results:
            rt = self.resolve_type(r.type)
            r.ty = rt                                   # type: ignore[attr-defined]
            if r.name:
                ctx.declare(r.name, _Local(rt, decl.ghost or rt.is_ghost(),
                                           False, r.span))
                ctx.result_names.add(r.name)

    def _check_func(self, decl: A.FuncDecl,
                    proof_for: Optional[tuple[str, str]] = None,
                    itf_spec: Optional[A.SpecClauses] = None) -> None:
        ctx = _FuncCtx(decl, proof_for)
        self.ctx = ctx
        self._declare_params(ctx, decl)
        if decl.pure:
            if len(decl.results) != 1:
                raise self._err(decl.span, "pure function must have exactly one result")
            if decl.body is not None and not (
                    len(decl.body.stmts) == 1
                    and isinstance(decl.body.stmts[0], A.Return)
                    and len(decl.body.stmts[0].values) == 1):
                raise self._err(decl.span,
                                "pure function body must be a single return expression")
        self._check_spec(decl.spec, ctx)
        if decl.body is not None:
            prev_pure = self.pure_ctx
            self.pure_ctx = decl.pure
            prev_ghost = self.ghost_depth
            if decl.ghost:
                self.ghost_depth += 1
            try:
                self._check_block(decl.body, ctx)
            finally:
                self.pure_ctx = prev_pure
                self.ghost_depth = prev_ghost
        self._finish_sharedness(ctx)
        self.ctx = None

    def _check_spec(self, spec: A.SpecClauses, ctx: _FuncCtx) -> None:
        for pre in spec.preconditions:
            self.old_allowed = False
            self._check_assertion(pre)
        for post in spec.postconditions:
            self.old_allowed = True
            self._check_assertion(post)
            self.old_allowed = False

    def _check_pred(self, decl: A.PredDecl) -> None:
        fake = A.FuncDecl(decl.span, decl.name, A.SpecClauses(), False, True,
                          decl.receiver, decl.params, [], None)
        ctx = _FuncCtx(fake)
        self.ctx = ctx
        self._declare_params(ctx, fake)
        if decl.body is not None:
            self.ghost_depth += 1
            try:
                self._check_assertion(decl.body)
            finally:
                self.ghost_depth -= 1
        elif decl.receiver is not None:
            raise self._err(decl.span, "abstract predicates are only legal in interfaces")
        self.ctx = None

    def _check_proof_decl(self, decl: A.ImplProofDecl) -> None:
        impl = self.resolve_type(decl.impl_type)
        itf = self.resolve_type(decl.itf_type)
        assert isinstance(itf, ty.InterfaceType)
        itf_info = self.info.interfaces[itf.name]
        report = self.implements(impl, itf.name)
        missing = sorted(n for n, m in report.items() if m is None)
        if missing:
            raise self._err(decl.span,
                            f"{impl} does not implement {itf.name}: missing {', '.join(missing)}")
        seen: set[str] = set()
        for member in decl.members:
            if member.name not in itf_info.methods:
                raise self._err(member.span,
                                f"{itf.name} has no method {member.name}")
            if member.name in seen:
                raise self._err(member.span, f"duplicate proof member {member.name}")
            seen.add(member.name)
            sig = itf_info.methods[member.name]
            if member.pure != sig.pure:
                raise self._err(member.span, "proof member purity must match the interface")
            self._check_proof_shape(member, impl)
            self._check_func(member, proof_for=(type_key(impl), itf.name))
        # predicate definitions must exist for every interface predicate the
        # proof's bodies rely on; build_apf checks the reverse direction.

    def _check_proof_shape(self, member: A.FuncDecl, impl: ty.TypeRepr) -> None:
        """Proof bodies are ghost*, one call to the implementation, ghost*, return."""
        if member.pure:
            return  # single-return shape checked by the pure rule
        assert member.body is not None
        call_seen = False
        for stmt in member.body.stmts[:-1]:
            if isinstance(stmt, (A.FoldStmt, A.AssertStmt, A.GhostBlock)):
                continue
            if isinstance(stmt, (A.ShortDecl, A.Assign, A.ExprStmt)) and getattr(stmt, "ghost", False):
                continue
            call = None
            if isinstance(stmt, (A.Assign, A.ShortDecl)):
                rhs = stmt.rhs
                call = rhs if isinstance(rhs, A.Call) else None
            elif isinstance(stmt, A.ExprStmt):
                call = stmt.expr if isinstance(stmt.expr, A.Call) else None
            if call is not None and not call_seen:
                if not (isinstance(call.callee, A.FieldSel)
                        and isinstance(call.callee.base, A.Ident)
                        and member.receiver is not None
                        and call.callee.base.name == member.receiver.name
                        and call.callee.field == member.name):
                    raise self._err(stmt.span,
                                    "proof body must call the implementation method "
                                    "with identical arguments")
                want = [p.name for p in member.params]
                got = [a.name if isinstance(a, A.Ident) else None for a in call.args]
                if got != want:
                    raise self._err(stmt.span,
                                    "proof call arguments must be the proof parameters")
                call_seen = True
                continue
            raise self._err(stmt.span,
                            "proof bodies are ghost statements around a single call")
        last = member.body.stmts[-1] if member.body.stmts else None
        if member.results and not isinstance(last, A.Return):
            raise self._err(member.span, "proof body must end in a return")
        if not call_seen and not member.results:
            raise self._err(member.span, "proof body must call the implementation method")

    # ── sharedness ───────────────────────────────────────────────

    def _need_shared(self, name: str, reason: str) -> None:
        assert self.ctx is not None
        local = self.ctx.lookup(name)
        if local is not None and local.needs_shared is None:
            local.needs_shared = reason

    def _finish_sharedness(self, ctx: _FuncCtx) -> None:
        for name, local in ctx.all_locals().items():
            if local.needs_shared and not local.shared:
                self.errors.append(self._err(
                    local.span,
                    f"{name} must be declared shared ('{name}@'): {local.needs_shared}"))
            elif local.shared and not local.needs_shared:
                msg = f"{local.span}: {name} is marked '@' but never needs sharing"
                if self.lenient:
                    self.warnings.append(msg)
                else:
                    self.errors.append(self._err(
                        local.span, f"unnecessary '@' on {name} (use --lenient-shared to allow)"))

    # ── statements ───────────────────────────────────────────────

    def _check_block(self, block: A.Block, ctx: _FuncCtx) -> None:
        ctx.push()
        for stmt in block.stmts:
            self._check_stmt(stmt, ctx)
        ctx.pop()

    def _ghost_stmt(self) -> bool:
        return self.ghost_depth > 0

    def _check_stmt(self, stmt: A.Stmt, ctx: _FuncCtx) -> None:
        if self.pure_ctx and not isinstance(stmt, A.Return):
            raise self._err(stmt.span, "pure function bodies are a single return")
        if isinstance(stmt, A.Block):
            self._check_block(stmt, ctx)
        elif isinstance(stmt, A.VarDecl):
            self._check_var_decl(stmt, ctx)
        elif isinstance(stmt, A.ShortDecl):
            self._check_short_decl(stmt, ctx)
        elif isinstance(stmt, A.Assign):
            self._check_assign(stmt, ctx)
        elif isinstance(stmt, A.OpAssign):
            t = self._check_lvalue(stmt.target, ctx)
            rt = self.check_expr(stmt.rhs)
            if not isinstance(t, ty.IntType) or not isinstance(rt, ty.IntType):
                raise self._err(stmt.span, f"{stmt.op}= requires int operands")
        elif isinstance(stmt, A.IncDec):
            t = self._check_lvalue(stmt.target, ctx)
            if not isinstance(t, ty.IntType):
                raise self._err(stmt.span, f"{stmt.op} requires an int target")
        elif isinstance(stmt, A.If):
            ghost = stmt.ghost
            if ghost:
                self.ghost_depth += 1
            cond = self.check_expr(stmt.cond)
            if not isinstance(cond, ty.BoolType):
                raise self._err(stmt.cond.span, "if condition must be bool")
            self._check_block(stmt.then, ctx)
            if stmt.other is not None:
                self._check_stmt(stmt.other, ctx)
            if ghost:
                self.ghost_depth -= 1
        elif isinstance(stmt, A.For):
            self._check_for(stmt, ctx)
        elif isinstance(stmt, A.Return):
            self._check_return(stmt, ctx)
        elif isinstance(stmt, A.GoStmt):
            if self._ghost_stmt():
                raise self._err(stmt.span, "goroutines cannot be spawned from ghost code")
            self.check_expr(stmt.call)
            kind = getattr(stmt.call, "call_kind", None)
            if kind not in ("func", "method"):
                raise self._err(stmt.span, "go requires a function or method call")
        elif isinstance(stmt, A.SendStmt):
            ct = self.check_expr(stmt.channel)
            if not isinstance(ct, ty.ChanType) or ct.direction == "recv":
                raise self._err(stmt.span, "send requires a sendable channel")
            vt = self.check_expr(stmt.value)
            self.assignable(stmt.value.span, vt, ct.elem)
        elif isinstance(stmt, A.ExprStmt):
            in_ghost = stmt.ghost or self._ghost_stmt()
            if stmt.ghost:
                self.ghost_depth += 1
            t = self.check_expr(stmt.expr)
            if not isinstance(stmt.expr, A.Call):
                raise self._err(stmt.span, "expression statements must be calls")
            if stmt.ghost:
                self.ghost_depth -= 1
            if not in_ghost:
                kind = getattr(stmt.expr, "call_kind", None)
                if kind == "builtin" and getattr(stmt.expr, "builtin_kind", "") == "ghost_stmt":
                    raise self._err(stmt.span,
                                    f"{getattr(stmt.expr, 'builtin_name', '?')} is ghost; "
                                    "prefix the statement with 'ghost'")
        elif isinstance(stmt, A.FoldStmt):
            self.ghost_depth += 1
            self.spec_depth += 1
            try:
                t = self.check_expr(stmt.instance.target)
                if not isinstance(t, ty.PredInstanceType):
                    raise self._err(stmt.span, "fold/unfold needs a predicate instance")
            finally:
                self.spec_depth -= 1
                self.ghost_depth -= 1
        elif isinstance(stmt, A.AssertStmt):
            self.ghost_depth += 1
            try:
                self._check_assertion(stmt.assertion)
            finally:
                self.ghost_depth -= 1
        elif isinstance(stmt, A.GhostBlock):
            self.ghost_depth += 1
            try:
                self._check_block(stmt.body, ctx)
            finally:
                self.ghost_depth -= 1
        else:
            raise self._err(stmt.span, f"unsupported statement {type(stmt).__name__}")

    def _check_var_decl(self, stmt: A.VarDecl, ctx: _FuncCtx) -> None:
        ghost = stmt.ghost or self._ghost_stmt()
        declared: Optional[ty.TypeRepr] = None
        if stmt.type is not None:
            declared = self.resolve_type(stmt.type)
        init_t: Optional[ty.TypeRepr] = None
        if stmt.init is not None:
            if ghost:
                self.ghost_depth += 1
            init_t = self.check_expr(stmt.init)
            if ghost:
                self.ghost_depth -= 1
        if declared is None:
            assert init_t is not None
            declared = init_t
        elif init_t is not None:
            self.assignable(stmt.init.span, init_t, declared)
        elif not isinstance(declared, (ty.IntType, ty.BoolType, ty.BuiltinType)):
            raise self._err(stmt.span,
                            f"variable of type {declared} needs an initializer")
        if declared.is_ghost() and not ghost:
            raise self._err(stmt.span, f"{declared} is a ghost type; declare with 'ghost'")
        if not ghost and self._ghost_depth_illegal(stmt.init):
            raise self._err(stmt.span, "ghost value cannot initialize a non-ghost variable")
        ctx.declare(stmt.name, _Local(declared, ghost or declared.is_ghost(),
                                      stmt.shared, stmt.span,
                                      isinstance(declared, ty.ArrayType)))
        stmt.ty = declared                                  # type: ignore[attr-defined]

    def _ghost_depth_illegal(self, expr: Optional[A.Expr]) -> bool:
        if expr is None or self._ghost_stmt():
            return False
        t = getattr(expr, "ty", None)
        return t is not None and t.is_ghost()

    def _check_short_decl(self, stmt: A.ShortDecl, ctx: _FuncCtx) -> None:
        ghost = stmt.ghost or self._ghost_stmt()
        if ghost:
            self.ghost_depth += 1
        try:
            if len(stmt.names) == 2 and isinstance(stmt.rhs, A.Recv):
                ct = self.check_expr(stmt.rhs.channel)
                if not isinstance(ct, ty.ChanType) or ct.direction == "send":
                    raise self._err(stmt.rhs.span, "receive requires a receivable channel")
                stmt.rhs.ty = ct.elem                       # type: ignore[attr-defined]
                stmt.rhs.two_result = True                  # type: ignore[attr-defined]
                types = [ct.elem, ty.BOOL]
            elif len(stmt.names) == 1:
                types = [self.check_expr(stmt.rhs)]
            else:
                raise self._err(stmt.span, "multi-value := only supports channel receive")
        finally:
            if ghost:
                self.ghost_depth -= 1
        for name, t in zip(stmt.names, types):
            if t.is_ghost() and not ghost:
                raise self._err(stmt.span, f"{t} is a ghost type; declare with 'ghost'")
            if isinstance(t, ty.PredInstanceType):
                raise self._err(stmt.span, "predicate instances are not first-class values")
            ctx.declare(name, _Local(t, ghost or t.is_ghost(), stmt.shared,
                                     stmt.span, isinstance(t, ty.ArrayType)))
        stmt.types = types                                  # type: ignore[attr-defined]

    def _check_assign(self, stmt: A.Assign, ctx: _FuncCtx) -> None:
        ghost = stmt.ghost or self._ghost_stmt()
        if ghost:
            self.ghost_depth += 1
        try:
            if len(stmt.targets) == 2 and isinstance(stmt.rhs, A.Recv):
                ct = self.check_expr(stmt.rhs.channel)
                if not isinstance(ct, ty.ChanType) or ct.direction == "send":
                    raise self._err(stmt.rhs.span, "receive requires a receivable channel")
                stmt.rhs.ty = ct.elem                       # type: ignore[attr-defined]
                stmt.rhs.two_result = True                  # type: ignore[attr-defined]
                rhs_types = [ct.elem, ty.BOOL]
            else:
                if len(stmt.targets) != 1:
                    raise self._err(stmt.span, "multi-assignment only supports channel receive")
                rhs_types = [self.check_expr(stmt.rhs)]
        finally:
            if ghost:
                self.ghost_depth -= 1
        for target, rt in zip(stmt.targets, rhs_types):
            tt = self._check_lvalue(target, ctx)
            self.assignable(stmt.span, rt, tt)
            target_ghost = self._lvalue_ghost(target)
            if not target_ghost and not ghost and rt.is_ghost():
                raise self._err(stmt.span, "ghost value cannot flow into non-ghost state")
            if target_ghost and not ghost:
                raise self._err(stmt.span, "assignment to ghost variable must be ghost")

    def _lvalue_ghost(self, e: A.Expr) -> bool:
        if isinstance(e, A.Ident):
            assert self.ctx is not None
            local = self.ctx.lookup(e.name)
            return bool(local and local.ghost)
        return False

    def _check_lvalue(self, e: A.Expr, ctx: _FuncCtx) -> ty.TypeRepr:
        if isinstance(e, A.Ident):
            local = ctx.lookup(e.name)
            if local is None:
                raise self._err(e.span, f"undeclared variable {e.name}")
            e.ty = local.type                               # type: ignore[attr-defined]
            e.binding = "local"                             # type: ignore[attr-defined]
            return local.type
        if isinstance(e, (A.Index, A.FieldSel, A.Deref)):
            return self.check_expr(e)
        raise self._err(e.span, "not an assignable location")

    def _check_for(self, stmt: A.For, ctx: _FuncCtx) -> None:
        ctx.push()
        if stmt.init is not None:
            self._check_stmt(stmt.init, ctx)
        if stmt.cond is not None:
            t = self.check_expr(stmt.cond)
            if not isinstance(t, ty.BoolType):
                raise self._err(stmt.cond.span, "loop condition must be bool")
        if stmt.post is not None:
            self._check_stmt(stmt.post, ctx)
        for inv in stmt.invariants:
            self.old_allowed = True
            self._check_assertion(inv)
            self.old_allowed = False
        self._check_block(stmt.body, ctx)
        ctx.pop()

    def _check_return(self, stmt: A.Return, ctx: _FuncCtx) -> None:
        decl = ctx.decl
        if not stmt.values:
            named = all(r.name for r in decl.results) and decl.results
            if decl.results and not named:
                raise self._err(stmt.span, "return needs values for unnamed results")
            return
        if len(stmt.values) != len(decl.results):
            raise self._err(stmt.span,
                            f"return arity {len(stmt.values)} != {len(decl.results)}")
        for value, result in zip(stmt.values, decl.results):
            if decl.pure:
                self.ghost_depth += 1
            try:
                vt = self.check_expr(value)
            finally:
                if decl.pure:
                    self.ghost_depth -= 1
            self.assignable(value.span, vt, result.ty)      # type: ignore[attr-defined]

    # ── assertions ───────────────────────────────────────────────

    def _check_assertion(self, e: A.Expr) -> None:
        self.spec_depth += 1
        self.ghost_depth += 1
        try:
            t = self.check_expr(e)
            if not isinstance(t, (ty.BoolType, ty.PredInstanceType)):
                raise self._err(e.span, f"assertion must be boolean, got {t}")
        finally:
            self.ghost_depth -= 1
            self.spec_depth -= 1

    # ── expressions ──────────────────────────────────────────────

    def check_expr(self, e: A.Expr) -> ty.TypeRepr:
        t = self._expr(e)
        e.ty = t                                            # type: ignore[attr-defined]
        return t

    def _expr(self, e: A.Expr) -> ty.TypeRepr:
        if isinstance(e, A.IntLit):
            return ty.INT
        if isinstance(e, A.BoolLit):
            return ty.BOOL
        if isinstance(e, A.Ident):
            return self._ident(e)
        if isinstance(e, A.Binary):
            return self._binary(e)
        if isinstance(e, A.Unary):
            ot = self.check_expr(e.operand)
            if e.op == "-" and isinstance(ot, ty.IntType):
                return ty.INT
            if e.op == "!" and isinstance(ot, ty.BoolType):
                return ty.BOOL
            raise self._err(e.span, f"operator {e.op} undefined on {ot}")
        if isinstance(e, A.Ternary):
            ct = self.check_expr(e.cond)
            if not isinstance(ct, ty.BoolType):
                raise self._err(e.cond.span, "condition must be bool")
            tt = self.check_expr(e.then)
            ot = self.check_expr(e.other)
            if isinstance(tt, ty.PredInstanceType) or isinstance(ot, ty.PredInstanceType):
                if self.spec_depth == 0:
                    raise self._err(e.span, "conditional assertions only in specs")
                return ty.PRED_INSTANCE
            if tt != ot:
                raise self._err(e.span, f"conditional arms differ: {tt} vs {ot}")
            return tt
        if isinstance(e, A.FieldSel):
            return self._field_sel(e)
        if isinstance(e, A.Index):
            return self._index(e)
        if isinstance(e, A.Slicing):
            return self._slicing(e)
        if isinstance(e, A.AddrOf):
            return self._addr_of(e)
        if isinstance(e, A.Deref):
            bt = self.check_expr(e.target)
            if not isinstance(bt, ty.PointerType):
                raise self._err(e.span, f"cannot dereference {bt}")
            return bt.elem
        if isinstance(e, A.Call):
            return self._call(e)
        if isinstance(e, A.MakeExpr):
            t = self.resolve_type(e.type)
            if isinstance(t, ty.ChanType):
                for a in e.args:
                    at = self.check_expr(a)
                    if not isinstance(at, ty.IntType):
                        raise self._err(a.span, "channel capacity must be int")
                return t
            raise self._err(e.span, "make is only supported for channels")
        if isinstance(e, A.Recv):
            ct = self.check_expr(e.channel)
            if not isinstance(ct, ty.ChanType) or ct.direction == "send":
                raise self._err(e.span, "receive requires a receivable channel")
            e.two_result = False                            # type: ignore[attr-defined]
            return ct.elem
        if isinstance(e, A.TypeAssert):
            bt = self.check_expr(e.base)
            if not isinstance(bt, ty.InterfaceType):
                raise self._err(e.span, "type assertion requires an interface value")
            at = self.resolve_type(e.type)
            e.asserted = at                                 # type: ignore[attr-defined]
            return at
        if isinstance(e, A.TypeOfExpr):
            bt = self.check_expr(e.operand)
            if not isinstance(bt, ty.InterfaceType):
                raise self._err(e.span, "typeOf requires an interface value")
            return ty.TYPEVAL
        if isinstance(e, A.OldExpr):
            if not self.old_allowed:
                raise SpecError(e.span, "old is only allowed in postconditions "
                                        "and loop invariants")
            return self.check_expr(e.operand)
        if isinstance(e, A.LenExpr):
            ot = self.check_expr(e.operand)
            if isinstance(ot, (ty.SliceType, ty.ArrayType, ty.SeqType)):
                return ty.INT
            raise self._err(e.span, f"len undefined on {ot}")
        if isinstance(e, A.Unfolding):
            self.spec_depth += 1
            self.ghost_depth += 1
            try:
                t = self.check_expr(e.instance.target)
            finally:
                self.ghost_depth -= 1
                self.spec_depth -= 1
            if not isinstance(t, ty.PredInstanceType):
                raise self._err(e.instance.span, "unfolding needs a predicate instance")
            return self.check_expr(e.body)
        if isinstance(e, A.CompositeLit):
            t = self.resolve_type(e.type)
            if isinstance(t, ty.ArrayType):
                if len(e.elems) != t.length:
                    raise self._err(e.span,
                                    f"array literal has {len(e.elems)} elements, want {t.length}")
                for el in e.elems:
                    self.assignable(el.span, self.check_expr(el), t.elem)
                return t
            raise self._err(e.span, "composite literal must be an array type here")
        if isinstance(e, A.SeqLit):
            if self.ghost_depth == 0:
                raise self._err(e.span, "seq literals are ghost expressions")
            elem = self.resolve_type(e.elem_type)
            for el in e.elems:
                self.assignable(el.span, self.check_expr(el), elem)
            return ty.SeqType(elem)
        if isinstance(e, A.PartialApp):
            return self._partial_app(e)
        if isinstance(e, A.Forall):
            return self._forall(e)
        if isinstance(e, A.AccAssertion):
            return self._acc(e)
        raise self._err(e.span, f"unsupported expression {type(e).__name__}")

    def _ident(self, e: A.Ident) -> ty.TypeRepr:
        assert self.ctx is not None
        local = self.ctx.lookup(e.name)
        if local is not None:
            if local.ghost and self.ghost_depth == 0:
                raise self._err(e.span, f"ghost variable {e.name} in non-ghost code")
            e.binding = "local"                             # type: ignore[attr-defined]
            return local.type
        if e.name == "sync" and self.info.has_sync:
            e.binding = "package"                           # type: ignore[attr-defined]
            return ty.BuiltinType("package sync")
        if e.name in self.info.funcs:
            e.binding = "func"                              # type: ignore[attr-defined]
            return ty.BuiltinType("func")
        if e.name in self.info.preds or e.name == B.PRED_TRUE:
            e.binding = "pred"                              # type: ignore[attr-defined]
            return ty.BuiltinType("pred")
        raise self._err(e.span, f"undeclared identifier {e.name}")

    def _binary(self, e: A.Binary) -> ty.TypeRepr:
        if e.op == "==>":
            lt = self.check_expr(e.left)
            if not isinstance(lt, ty.BoolType):
                raise self._err(e.left.span, "antecedent must be bool")
            rt = self.check_expr(e.right)
            if not isinstance(rt, (ty.BoolType, ty.PredInstanceType)):
                raise self._err(e.right.span, "consequent must be an assertion")
            if isinstance(rt, ty.PredInstanceType) and self.spec_depth == 0:
                raise self._err(e.span, "permission implications only in specs")
            return rt if isinstance(rt, ty.PredInstanceType) else ty.BOOL
        if e.op in ("&&", "||"):
            lt = self.check_expr(e.left)
            rt = self.check_expr(e.right)
            kinds = (ty.BoolType, ty.PredInstanceType)
            if not isinstance(lt, kinds) or not isinstance(rt, kinds):
                raise self._err(e.span, f"{e.op} requires boolean operands")
            has_perm = isinstance(lt, ty.PredInstanceType) or isinstance(rt, ty.PredInstanceType)
            if has_perm:
                if e.op == "||":
                    raise self._err(e.span, "permissions cannot appear under ||")
                if self.spec_depth == 0:
                    raise self._err(e.span, "permission conjunctions only in specs")
                return ty.PRED_INSTANCE
            return ty.BOOL
        if e.op == "++":
            lt = self.check_expr(e.left)
            rt = self.check_expr(e.right)
            if isinstance(lt, ty.SeqType) and lt == rt:
                return lt
            raise self._err(e.span, f"++ requires equal seq types, got {lt} and {rt}")
        if e.op in ("+", "-", "*", "/", "%"):
            lt = self.check_expr(e.left)
            rt = self.check_expr(e.right)
            if isinstance(lt, ty.IntType) and isinstance(rt, ty.IntType):
                return ty.INT
            raise self._err(e.span, f"{e.op} requires int operands")
        if e.op in ("<", "<=", ">", ">="):
            lt = self.check_expr(e.left)
            rt = self.check_expr(e.right)
            if isinstance(lt, ty.IntType) and isinstance(rt, ty.IntType):
                return ty.BOOL
            raise self._err(e.span, f"{e.op} requires int operands")
        assert e.op in ("==", "!=")
        lt = self.check_expr(e.left)
        # type literals on the right of typeOf comparisons
        if isinstance(lt, ty.TypeValType):
            rt = self._type_operand(e.right)
        else:
            rt = self.check_expr(e.right)
            if isinstance(rt, ty.TypeValType) and not isinstance(lt, ty.TypeValType):
                lt = self._type_operand(e.left)
        if lt != rt:
            raise self._err(e.span, f"cannot compare {lt} with {rt}")
        if not ty.is_comparable_eq(lt):
            raise self._err(e.span, f"{lt} values are not comparable")
        return ty.BOOL

    def _type_operand(self, e: A.Expr) -> ty.TypeRepr:
        """Reinterpret an expression as a type literal (typeOf comparisons)."""
        t = self._as_type(e)
        if t is None:
            return self.check_expr(e)
        e.as_type = t                                       # type: ignore[attr-defined]
        e.ty = ty.TYPEVAL                                   # type: ignore[attr-defined]
        return ty.TYPEVAL

    def _as_type(self, e: A.Expr) -> Optional[ty.TypeRepr]:
        if isinstance(e, A.Ident):
            if e.name == "int":
                return ty.INT
            if e.name == "bool":
                return ty.BOOL
            if e.name in self.info.structs:
                return ty.StructType(e.name)
            if e.name in self.info.interfaces:
                return ty.InterfaceType(e.name)
            return None
        if isinstance(e, A.Deref):
            inner = self._as_type(e.target)
            return ty.PointerType(inner) if inner is not None else None
        if isinstance(e, A.TypeOfExpr):
            return None
        return None

    def _field_sel(self, e: A.FieldSel) -> ty.TypeRepr:
        bt = self.check_expr(e.base)
        st = ty.deref(bt)
        if isinstance(st, ty.StructType):
            ft = self.info.field_type(st.name, e.field)
            if ft is None:
                raise self._err(e.span, f"{st.name} has no field {e.field}")
            e.struct_name = st.name                         # type: ignore[attr-defined]
            return ft
        raise self._err(e.span, f"{bt} has no field {e.field}")

    def _index(self, e: A.Index) -> ty.TypeRepr:
        bt = self.check_expr(e.base)
        it = self.check_expr(e.index)
        if not isinstance(it, ty.IntType):
            raise self._err(e.index.span, "index must be int")
        if isinstance(bt, ty.SliceType):
            return bt.elem
        if isinstance(bt, ty.ArrayType):
            self._mark_array_use(e.base, "indexed")
            return bt.elem
        if isinstance(bt, ty.SeqType):
            return bt.elem
        raise self._err(e.span, f"cannot index {bt}")

    def _slicing(self, e: A.Slicing) -> ty.TypeRepr:
        bt = self.check_expr(e.base)
        for bound in (e.lo, e.hi):
            if bound is not None and not isinstance(self.check_expr(bound), ty.IntType):
                raise self._err(bound.span, "slice bound must be int")
        if isinstance(bt, ty.SliceType):
            return bt
        if isinstance(bt, ty.ArrayType):
            self._mark_array_use(e.base, "sliced")
            return ty.SliceType(bt.elem)
        raise self._err(e.span, f"cannot slice {bt}")

    def _mark_array_use(self, base: A.Expr, how: str) -> None:
        if isinstance(base, A.Ident):
            self._need_shared(base.name, f"array is {how}")

    def _addr_of(self, e: A.AddrOf) -> ty.TypeRepr:
        target = e.target
        if isinstance(target, A.PartialApp):
            # &counter{0, 50}: allocation of a shared struct
            t = self._partial_app(target)
            if not isinstance(t, ty.StructType):
                raise self._err(e.span, "& literal must be a struct literal")
            target.ty = t                                   # type: ignore[attr-defined]
            e.alloc = True                                  # type: ignore[attr-defined]
            return ty.PointerType(t)
        t = self.check_expr(target)
        if isinstance(target, A.Ident):
            self._need_shared(target.name, "its address is taken")
        elif isinstance(target, A.Index):
            if isinstance(getattr(target.base, "ty", None), ty.ArrayType) \
                    and isinstance(target.base, A.Ident):
                self._need_shared(target.base.name, "an element address is taken")
        elif not isinstance(target, (A.FieldSel, A.Deref)):
            raise self._err(e.span, "cannot take the address of this expression")
        return ty.PointerType(t)

    def _forall(self, e: A.Forall) -> ty.TypeRepr:
        assert self.ctx is not None
        if self.spec_depth == 0 and self.ghost_depth == 0:
            raise self._err(e.span, "quantifiers only in specifications")
        vt = self.resolve_type(e.var_type)
        if not isinstance(vt, ty.IntType):
            raise self._err(e.span, "quantified variables must be int")
        self.ctx.push()
        for name in e.vars:
            self.ctx.declare(name, _Local(vt, True, False, e.span))
        try:
            if e.trigger is not None:
                self.check_expr(e.trigger)
            bt = self.check_expr(e.body)
            if not isinstance(bt, (ty.BoolType, ty.PredInstanceType)):
                raise self._err(e.body.span, "quantifier body must be an assertion")
            return bt if isinstance(bt, ty.BoolType) else ty.PRED_INSTANCE
        finally:
            self.ctx.pop()

    def _acc(self, e: A.AccAssertion) -> ty.TypeRepr:
        if self.spec_depth == 0:
            raise self._err(e.span, "acc only in specifications")
        target = e.target
        if isinstance(target, A.AddrOf):
            self.check_expr(target)
            e.acc_kind = "loc"                              # type: ignore[attr-defined]
            return ty.PRED_INSTANCE
        t = self.check_expr(target)
        if isinstance(t, ty.PredInstanceType):
            e.acc_kind = "pred"                             # type: ignore[attr-defined]
            return ty.PRED_INSTANCE
        raise self._err(e.span, "acc expects a location or predicate instance")

    # ── calls ────────────────────────────────────────────────────

    def _partial_app(self, e: A.PartialApp) -> ty.TypeRepr:
        # struct literal?
        if isinstance(e.callee, A.Ident) and e.callee.name in self.info.structs:
            fields = self.info.structs[e.callee.name]
            if any(a is None for a in e.args):
                raise self._err(e.span, "struct literals cannot contain holes")
            if len(e.args) != len(fields):
                raise self._err(e.span,
                                f"{e.callee.name} literal needs {len(fields)} fields")
            for arg, (_, ft) in zip(e.args, fields):
                assert arg is not None
                self.assignable(arg.span, self.check_expr(arg), ft)
            e.papp_kind = "struct_lit"                      # type: ignore[attr-defined]
            e.struct_name = e.callee.name                   # type: ignore[attr-defined]
            return ty.StructType(e.callee.name)
        # predicate value
        if self.ghost_depth == 0:
            raise self._err(e.span, "predicate values are ghost expressions")
        key, params = self._resolve_pred_callee(e.callee, partial=True)
        if len(e.args) != len(params):
            raise self._err(e.span,
                            f"predicate {e.callee_text() if hasattr(e, 'callee_text') else ''}"
                            f" expects {len(params)} arguments, got {len(e.args)}")
        holes: list[int] = []
        for i, (arg, pt) in enumerate(zip(e.args, params)):
            if arg is None:
                holes.append(i)
            else:
                self.assignable(arg.span, self.check_expr(arg), pt)
        e.papp_kind = "predval"                             # type: ignore[attr-defined]
        e.pred_key = key                                    # type: ignore[attr-defined]
        e.holes = tuple(holes)                              # type: ignore[attr-defined]
        e.param_types = tuple(params)                       # type: ignore[attr-defined]
        return ty.PredValType(tuple(params[i] for i in holes))

    def _resolve_pred_callee(self, callee: A.Expr,
                             partial: bool) -> tuple[str, list[ty.TypeRepr]]:
        """Resolve the predicate named by a partial application callee."""
        if isinstance(callee, A.Ident):
            if callee.name == B.PRED_TRUE:
                return B.BK_PREDTRUE, []
            decl = self.info.preds.get(callee.name)
            if decl is None:
                raise self._err(callee.span, f"unknown predicate {callee.name}")
            return pred_key_top(callee.name), [self.resolve_type(p.type)
                                               for p in decl.params]
        if isinstance(callee, A.FieldSel):
            bt = self.check_expr(callee.base)
            key, params, _ = self._member_pred(callee.span, bt, callee.field,
                                               callee.base)
            return key, params
        raise self._err(callee.span, "unsupported predicate reference")

    def _member_pred(self, span: SourceSpan, bt: ty.TypeRepr, name: str,
                     base: A.Expr) -> tuple[str, list[ty.TypeRepr], str]:
        """Predicates reached through a receiver: wg.UnitDebt, c.SendChannel,
        y.memory, sync.InjEval. Returns (key, extra param types, family)."""
        if isinstance(bt, ty.ChanType) and name in B.CHAN_MEMBERS \
                and B.CHAN_MEMBERS[name].kind == "pred":
            return B.BUILTIN_PRED_BY_MEMBER[("chan", name)], [], "chan"
        if ty.deref(bt) == ty.WAITGROUP and name in B.WG_MEMBERS \
                and B.WG_MEMBERS[name].kind == "pred":
            params: list[ty.TypeRepr] = {
                "UnitDebt": [ty.PredValType(())],
                "Token": [ty.PredValType(())],
                "TokenById": [ty.PredValType(()), ty.INT],
            }.get(name, [])
            return B.BUILTIN_PRED_BY_MEMBER[("wg", name)], params, "wg"
        if isinstance(bt, ty.BuiltinType) and bt.name == "package sync" \
                and name in B.SYNC_MEMBERS:
            return B.BK_INJEVAL, [ty.PredValType(()), ty.INT], "sync"
        # interface predicate through an interface value
        if isinstance(bt, ty.InterfaceType) and not bt.empty:
            itf = self.info.interfaces[bt.name]
            if name in itf.preds:
                sig = itf.preds[name]
                return (pred_key_iface(bt.name, name),
                        [self.resolve_type(p.type) for p in sig.params], "iface")
        # interface predicate through the proof receiver (boxed), or a
        # concrete receiver predicate
        assert self.ctx is not None
        if self.ctx.proof_for is not None:
            impl_key, itf_name = self.ctx.proof_for
            if type_key(bt) == impl_key:
                itf = self.info.interfaces[itf_name]
                if name in itf.preds:
                    sig = itf.preds[name]
                    base.box_to = itf_name                  # type: ignore[attr-defined]
                    return (pred_key_iface(itf_name, name),
                            [self.resolve_type(p.type) for p in sig.params], "iface")
        rkey = type_key(bt)
        decl = self.info.recv_preds.get((rkey, name))
        if decl is None and isinstance(bt, ty.PointerType):
            decl = self.info.recv_preds.get((type_key(bt.elem), name))
            rkey = type_key(bt.elem)
        if decl is not None:
            return (pred_key_recv(rkey, name),
                    [self.resolve_type(p.type) for p in decl.params], "recv")
        raise self._err(span, f"{bt} has no predicate {name}")

    def _call(self, e: A.Call) -> ty.TypeRepr:
        callee = e.callee
        # application of a predicate value: instance
        if isinstance(callee, A.PartialApp):
            pv = self.check_expr(callee)
            if not isinstance(pv, ty.PredValType):
                raise self._err(e.span, "cannot call a struct literal")
            if len(e.args) != len(pv.params):
                raise self._err(e.span,
                                f"predicate application expects {len(pv.params)} "
                                f"arguments, got {len(e.args)}")
            for arg, pt in zip(e.args, pv.params):
                self.assignable(arg.span, self.check_expr(arg), pt)
            e.call_kind = "predval_apply"                   # type: ignore[attr-defined]
            return ty.PRED_INSTANCE
        if isinstance(callee, A.Ident):
            return self._call_named(e, callee)
        if isinstance(callee, A.FieldSel):
            return self._call_member(e, callee)
        # e.g. application of a pred()-typed value: pseqs[i]()
        pv = self.check_expr(callee)
        if isinstance(pv, ty.PredValType):
            if len(e.args) != len(pv.params):
                raise self._err(e.span, "wrong arity for predicate value application")
            for arg, pt in zip(e.args, pv.params):
                self.assignable(arg.span, self.check_expr(arg), pt)
            e.call_kind = "predval_apply"                   # type: ignore[attr-defined]
            return ty.PRED_INSTANCE
        raise self._err(e.span, "expression is not callable")

    def _check_call_args(self, e: A.Call, decl: A.FuncDecl) -> None:
        if len(e.args) != len(decl.params):
            raise self._err(e.span, f"{decl.name} expects {len(decl.params)} "
                                    f"arguments, got {len(e.args)}")
        for arg, p in zip(e.args, decl.params):
            at = self.check_expr(arg)
            self.assignable(arg.span, at, self.resolve_type(p.type))
            if at.is_ghost() and not decl.ghost and not self._ghost_stmt():
                raise self._err(arg.span, "ghost argument to non-ghost function")

    def _func_result(self, e: A.Call, decl: A.FuncDecl) -> ty.TypeRepr:
        if decl.pure and self.spec_depth == 0 and self.ghost_depth == 0 \
                and not decl.ghost:
            pass  # pure functions are callable from code too
        if not decl.pure and (self.spec_depth > 0 or self.pure_ctx):
            raise self._err(e.span, f"{decl.name} is not pure; impure calls "
                                    "cannot appear in specifications")
        if decl.ghost and self.ghost_depth == 0:
            raise self._err(e.span, f"{decl.name} is ghost")
        if not decl.results:
            return ty.BuiltinType("void")
        if len(decl.results) == 1:
            return self.resolve_type(decl.results[0].type)
        raise self._err(e.span, "multi-result calls are not supported in expressions")

    def _call_named(self, e: A.Call, callee: A.Ident) -> ty.TypeRepr:
        name = callee.name
        decl = self.info.funcs.get(name)
        if decl is not None:
            self._check_call_args(e, decl)
            e.call_kind = "pure_func" if decl.pure else "func"  # type: ignore[attr-defined]
            e.func_name = name                              # type: ignore[attr-defined]
            return self._func_result(e, decl)
        # bare predicate instance p(...) in specs
        pdecl = self.info.preds.get(name)
        if pdecl is not None or name == B.PRED_TRUE:
            if self.spec_depth == 0:
                raise self._err(e.span, "predicate instances only in specifications")
            key, params = self._resolve_pred_callee(callee, partial=False)
            if len(e.args) != len(params):
                raise self._err(e.span, f"{name} expects {len(params)} arguments")
            for arg, pt in zip(e.args, params):
                self.assignable(arg.span, self.check_expr(arg), pt)
            e.call_kind = "pred_instance"                   # type: ignore[attr-defined]
            e.pred_key = key                                # type: ignore[attr-defined]
            e.recv_expr = None                              # type: ignore[attr-defined]
            return ty.PRED_INSTANCE
        # interface member via implicit receiver inside interface specs
        raise self._err(e.span, f"unknown function {name}")

    def _call_member(self, e: A.Call, callee: A.FieldSel) -> ty.TypeRepr:
        bt = self.check_expr(callee.base)
        name = callee.field

        # built-in channel members
        if isinstance(bt, ty.ChanType) and name in B.CHAN_MEMBERS:
            return self._call_builtin(e, callee, "chan", bt)
        if (ty.deref(bt) == ty.WAITGROUP or bt == ty.WAITGROUP) and name in B.WG_MEMBERS:
            if bt == ty.WAITGROUP and isinstance(callee.base, A.Ident):
                self._need_shared(callee.base.name, "its address is taken (receiver)")
            return self._call_builtin(e, callee, "wg", bt)
        if isinstance(bt, ty.BuiltinType) and bt.name == "package sync":
            return self._call_builtin(e, callee, "sync", bt)

        # interface members
        if isinstance(bt, ty.InterfaceType) and not bt.empty:
            itf = self.info.interfaces[bt.name]
            if name in itf.preds:
                return self._pred_instance_call(e, callee, bt)
            if name in itf.methods:
                sig = itf.methods[name]
                if len(e.args) != len(sig.params):
                    raise self._err(e.span, f"{name} expects {len(sig.params)} arguments")
                for arg, p in zip(e.args, sig.params):
                    self.assignable(arg.span, self.check_expr(arg),
                                    self.resolve_type(p.type))
                e.call_kind = "iface_pure" if sig.pure else "iface_method"  # type: ignore[attr-defined]
                e.itf_name = bt.name                        # type: ignore[attr-defined]
                e.method_name = name                        # type: ignore[attr-defined]
                if not sig.pure and (self.spec_depth > 0 or self.pure_ctx):
                    raise self._err(e.span, f"{name} is not pure")
                if not sig.results:
                    return ty.BuiltinType("void")
                return self.resolve_type(sig.results[0].type)
            raise self._err(e.span, f"{bt.name} has no member {name}")

        # concrete methods (with auto address-of for addressable receivers)
        mset_key = type_key(bt)
        decl = self.info.methods.get((mset_key, name))
        e.recv_addrof = False                               # type: ignore[attr-defined]
        if decl is None and not isinstance(bt, ty.PointerType):
            decl = self.info.methods.get((type_key(ty.PointerType(bt)), name))
            if decl is not None:
                if not isinstance(callee.base, A.Ident):
                    raise self._err(e.span, f"cannot take address of receiver for {name}")
                self._need_shared(callee.base.name, "its address is taken (receiver)")
                e.recv_addrof = True                        # type: ignore[attr-defined]
        if decl is None and isinstance(bt, ty.PointerType):
            decl = self.info.methods.get((type_key(bt.elem), name))
        if decl is not None:
            self._check_call_args(e, decl)
            e.call_kind = "pure_method" if decl.pure else "method"  # type: ignore[attr-defined]
            e.recv_key = type_key(self.resolve_type(decl.receiver.type))  # type: ignore[attr-defined]
            e.method_name = name                            # type: ignore[attr-defined]
            return self._func_result(e, decl)

        # concrete or interface predicate through the receiver
        if self.spec_depth > 0:
            return self._pred_instance_call(e, callee, bt)
        raise self._err(e.span, f"{bt} has no method {name}")

    def _pred_instance_call(self, e: A.Call, callee: A.FieldSel,
                            bt: ty.TypeRepr) -> ty.TypeRepr:
        if self.spec_depth == 0:
            raise self._err(e.span, "predicate instances only in specifications")
        key, params, family = self._member_pred(e.span, bt, callee.field, callee.base)
        if len(e.args) != len(params):
            raise self._err(e.span, f"{callee.field} expects {len(params)} arguments")
        for arg, pt in zip(e.args, params):
            self.assignable(arg.span, self.check_expr(arg), pt)
        e.call_kind = "pred_instance"                       # type: ignore[attr-defined]
        e.pred_key = key                                    # type: ignore[attr-defined]
        e.pred_family = family                              # type: ignore[attr-defined]
        e.recv_expr = callee.base                           # type: ignore[attr-defined]
        return ty.PRED_INSTANCE

    def _call_builtin(self, e: A.Call, callee: A.FieldSel, family: str,
                      bt: ty.TypeRepr) -> ty.TypeRepr:
        name = callee.field
        table = {"chan": B.CHAN_MEMBERS, "wg": B.WG_MEMBERS,
                 "sync": B.SYNC_MEMBERS}[family]
        member = table.get(name)
        if member is None:
            raise self._err(e.span, f"unknown member {name}")
        if member.kind == "pred":
            return self._pred_instance_call(e, callee, bt)
        arg_types = [self.check_expr(a) for a in e.args]
        if family == "chan":
            assert isinstance(bt, ty.ChanType)
            msg_pred = ty.PredValType((bt.elem,))
            shapes = []
            for shape in member.arg_shapes:
                shapes.append(tuple(
                    "predval_unit" if m == "predval_unit" else m for m in shape))
            matched = False
            for shape in member.arg_shapes:
                if len(shape) != len(arg_types):
                    continue
                ok = True
                for marker, at in zip(shape, arg_types):
                    want = msg_pred if marker == "predval_msg" else None
                    if marker == "predval_msg" and at != msg_pred:
                        ok = False
                    elif marker != "predval_msg" and not B.shape_matches((marker,), [at]):
                        ok = False
                if ok:
                    matched = True
                    break
            if not matched:
                raise self._err(e.span, f"bad arguments for {name}")
        else:
            if not any(B.shape_matches(shape, arg_types)
                       for shape in member.arg_shapes):
                raise self._err(e.span, f"bad arguments for {name}")
        if member.kind == "ghost_stmt" and self.ghost_depth == 0:
            raise self._err(e.span, f"{name} is ghost; prefix the statement with 'ghost'")
        e.call_kind = "builtin"                             # type: ignore[attr-defined]
        e.builtin_family = family                           # type: ignore[attr-defined]
        e.builtin_name = name                               # type: ignore[attr-defined]
        e.builtin_kind = member.kind                        # type: ignore[attr-defined]
        if member.result == "bool":
            return ty.BOOL
        if member.result == "predval_msg":
            assert isinstance(bt, ty.ChanType)
            return ty.PredValType((bt.elem,))
        if member.result == "predval_unit":
            return ty.PredValType(())
        return ty.BuiltinType("void")


def typecheck(program: A.Program, lenient_shared: bool = False) -> ProgramInfo:
    """Typecheck a parsed program; raises TypecheckError/SpecError on failure."""
    return Checker(program, lenient_shared).run()
