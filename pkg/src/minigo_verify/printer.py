"""Pretty-printer: AST back to parseable MiniGo text.

parse(print(parse(src))) is structurally equal to parse(src), modulo spans.
"""

from __future__ import annotations

from . import ast_nodes as A

# Precedence levels mirroring the parser.
_PREC = {
    "==>": 1, "?:": 2, "||": 3, "&&": 4,
    "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
    "+": 6, "-": 6, "++": 6, "*": 7, "/": 7, "%": 7,
}
_UNARY_PREC = 8


def _contains_braced(expr: A.Expr) -> bool:
    found = False

    def walk(e: object) -> None:
        nonlocal found
        if isinstance(e, (A.PartialApp, A.CompositeLit, A.SeqLit)):
            found = True
        if isinstance(e, A.Expr):
            for value in vars(e).values():
                if isinstance(value, A.Expr):
                    walk(value)
                elif isinstance(value, list):
                    for item in value:
                        walk(item)
                elif isinstance(value, A.AccAssertion):
                    walk(value)

    walk(expr)
    return found


class Printer:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.indent = 0

    def _emit(self, text: str) -> None:
        self.lines.append("    " * self.indent + text)

    # ── types ────────────────────────────────────────────────────

    def type_text(self, t: A.TypeExpr) -> str:
        if isinstance(t, A.NamedType):
            return t.name
        if isinstance(t, A.PointerType):
            return "*" + self.type_text(t.elem)
        if isinstance(t, A.ArrayType):
            return f"[{t.length}]{self.type_text(t.elem)}"
        if isinstance(t, A.SliceType):
            return "[]" + self.type_text(t.elem)
        if isinstance(t, A.ChanType):
            if t.direction == "recv":
                return "<-chan " + self.type_text(t.elem)
            if t.direction == "send":
                return "chan<- " + self.type_text(t.elem)
            return "chan " + self.type_text(t.elem)
        if isinstance(t, A.SeqType):
            return f"seq[{self.type_text(t.elem)}]"
        if isinstance(t, A.PredType):
            return "pred(" + ", ".join(self.type_text(p) for p in t.params) + ")"
        if isinstance(t, A.StructType):
            fields = "; ".join(f"{n} {self.type_text(ft)}" for n, ft in t.fields)
            return "struct{ " + fields + " }" if fields else "struct{}"
        if isinstance(t, A.InterfaceType):
            if not t.preds and not t.methods:
                return "interface{}"
            return "interface{ ... }"  # expanded only at declaration level
        raise AssertionError(f"unknown type node {t!r}")

    # ── expressions ──────────────────────────────────────────────

    def expr(self, e: A.Expr, parent_prec: int = 0) -> str:
        text, prec = self._expr_prec(e)
        if prec < parent_prec:
            return f"({text})"
        return text

    def _expr_prec(self, e: A.Expr) -> tuple[str, int]:
        atom = 10
        if isinstance(e, A.IntLit):
            return str(e.value), atom
        if isinstance(e, A.BoolLit):
            return ("true" if e.value else "false"), atom
        if isinstance(e, A.Ident):
            return e.name, atom
        if isinstance(e, A.FieldSel):
            return f"{self.expr(e.base, 9)}.{e.field}", 9
        if isinstance(e, A.Index):
            return f"{self.expr(e.base, 9)}[{self.expr(e.index)}]", 9
        if isinstance(e, A.Slicing):
            lo = self.expr(e.lo) if e.lo else ""
            hi = self.expr(e.hi) if e.hi else ""
            return f"{self.expr(e.base, 9)}[{lo}:{hi}]", 9
        if isinstance(e, A.AddrOf):
            return "&" + self.expr(e.target, _UNARY_PREC), _UNARY_PREC
        if isinstance(e, A.Deref):
            return "*" + self.expr(e.target, _UNARY_PREC), _UNARY_PREC
        if isinstance(e, A.Unary):
            return e.op + self.expr(e.operand, _UNARY_PREC), _UNARY_PREC
        if isinstance(e, A.Binary):
            prec = _PREC[e.op]
            if e.op == "==>":
                left = self.expr(e.left, prec + 1)
                right = self.expr(e.right, prec)
            else:
                left = self.expr(e.left, prec)
                right = self.expr(e.right, prec + 1)
            return f"{left} {e.op} {right}", prec
        if isinstance(e, A.Ternary):
            prec = _PREC["?:"]
            return (f"{self.expr(e.cond, prec + 1)} ? "
                    f"{self.expr(e.then, prec)} : {self.expr(e.other, prec)}",
                    prec)
        if isinstance(e, A.Call):
            args = ", ".join(self.expr(a) for a in e.args)
            return f"{self.expr(e.callee, 9)}({args})", 9
        if isinstance(e, A.MakeExpr):
            parts = [self.type_text(e.type)] + [self.expr(a) for a in e.args]
            return "make(" + ", ".join(parts) + ")", atom
        if isinstance(e, A.Recv):
            return "<-" + self.expr(e.channel, _UNARY_PREC), _UNARY_PREC
        if isinstance(e, A.TypeAssert):
            return f"{self.expr(e.base, 9)}.({self.type_text(e.type)})", 9
        if isinstance(e, A.TypeOfExpr):
            return f"typeOf({self.expr(e.operand)})", atom
        if isinstance(e, A.OldExpr):
            return f"old({self.expr(e.operand)})", atom
        if isinstance(e, A.LenExpr):
            return f"len({self.expr(e.operand)})", atom
        if isinstance(e, A.Unfolding):
            inst = self.acc_text(e.instance)
            return f"unfolding {inst} in {self.expr(e.body, 1)}", 1
        if isinstance(e, A.CompositeLit):
            elems = ", ".join(self.expr(x) for x in e.elems)
            return f"{self.type_text(e.type)}{{{elems}}}", 9
        if isinstance(e, A.SeqLit):
            elems = ", ".join(self.expr(x) for x in e.elems)
            return f"seq[{self.type_text(e.elem_type)}]{{{elems}}}", 9
        if isinstance(e, A.PartialApp):
            args = ", ".join("_" if a is None else self.expr(a) for a in e.args)
            return f"{self.expr(e.callee, 9)}{{{args}}}", 9
        if isinstance(e, A.Forall):
            names = ", ".join(e.vars)
            trig = f"{{ {self.expr(e.trigger)} }} " if e.trigger else ""
            body = self.expr(e.body, 1)
            return f"forall {names} {self.type_text(e.var_type)} :: {trig}{body}", 1
        if isinstance(e, A.AccAssertion):
            return self.acc_text(e), atom
        raise AssertionError(f"unknown expr node {e!r}")

    def acc_text(self, acc: A.AccAssertion) -> str:
        if acc.amount is None:
            return f"acc({self.expr(acc.target)})"
        amt = self.perm_text(acc.amount)
        return f"acc({self.expr(acc.target)}, {amt})"

    def perm_text(self, p: A.PermExpr) -> str:
        if p.wildcard:
            return "_"
        return f"{p.num}/{p.den}" if p.den != 1 else str(p.num)

    # ── statements ───────────────────────────────────────────────

    def stmt(self, s: A.Stmt) -> None:
        if isinstance(s, A.Block):
            self._emit("{")
            self._block_body(s)
            self._emit("}")
        elif isinstance(s, A.VarDecl):
            prefix = "ghost " if s.ghost else ""
            text = f"{prefix}var {s.name}{'@' if s.shared else ''}"
            if s.type is not None:
                text += " " + self.type_text(s.type)
            if s.init is not None:
                text += " = " + self.expr(s.init)
            self._emit(text)
        elif isinstance(s, A.ShortDecl):
            prefix = "ghost " if s.ghost else ""
            names = ", ".join(s.names)
            self._emit(f"{prefix}{names}{'@' if s.shared else ''} := {self.expr(s.rhs)}")
        elif isinstance(s, A.Assign):
            prefix = "ghost " if s.ghost else ""
            targets = ", ".join(self.expr(t) for t in s.targets)
            self._emit(f"{prefix}{targets} = {self.expr(s.rhs)}")
        elif isinstance(s, A.OpAssign):
            self._emit(f"{self.expr(s.target)} {s.op}= {self.expr(s.rhs)}")
        elif isinstance(s, A.IncDec):
            self._emit(f"{self.expr(s.target)}{s.op}")
        elif isinstance(s, A.If):
            self._if_stmt(s)
        elif isinstance(s, A.For):
            self._for_stmt(s)
        elif isinstance(s, A.Return):
            if s.values:
                self._emit("return " + ", ".join(self.expr(v) for v in s.values))
            else:
                self._emit("return")
        elif isinstance(s, A.GoStmt):
            self._emit("go " + self.expr(s.call))
        elif isinstance(s, A.SendStmt):
            self._emit(f"{self.expr(s.channel)} <- {self.expr(s.value)}")
        elif isinstance(s, A.ExprStmt):
            prefix = "ghost " if s.ghost else ""
            self._emit(prefix + self.expr(s.expr))
        elif isinstance(s, A.FoldStmt):
            kw = "unfold" if s.unfold else "fold"
            inst = s.instance
            if inst.amount is None:
                self._emit(f"{kw} {self.expr(inst.target)}")
            else:
                self._emit(f"{kw} {self.acc_text(inst)}")
        elif isinstance(s, A.AssertStmt):
            self._emit("assert " + self.expr(s.assertion))
        elif isinstance(s, A.GhostBlock):
            self._emit("ghost {")
            self._block_body(s.body)
            self._emit("}")
        else:
            raise AssertionError(f"unknown stmt node {s!r}")

    def _guard_expr(self, cond: A.Expr) -> str:
        text = self.expr(cond)
        return f"({text})" if _contains_braced(cond) else text

    def _if_stmt(self, s: A.If) -> None:
        prefix = "ghost " if s.ghost else ""
        self._emit(f"{prefix}if {self._guard_expr(s.cond)} {{")
        self._block_body(s.then)
        node = s
        while isinstance(node.other, A.If):
            node = node.other
            self._emit(f"}} else if {self._guard_expr(node.cond)} {{")
            self._block_body(node.then)
        if node.other is not None:
            assert isinstance(node.other, A.Block)
            self._emit("} else {")
            self._block_body(node.other)
        self._emit("}")

    def _simple_stmt_text(self, s: A.Stmt) -> str:
        sub = Printer()
        sub.stmt(s)
        assert len(sub.lines) == 1
        return sub.lines[0].strip()

    def _for_stmt(self, s: A.For) -> None:
        for inv in s.invariants:
            self._emit("invariant " + self.expr(inv))
        header = "for"
        if s.init is not None or s.post is not None:
            init = self._simple_stmt_text(s.init) if s.init else ""
            cond = self._guard_expr(s.cond) if s.cond else ""
            post = self._simple_stmt_text(s.post) if s.post else ""
            header += f" {init}; {cond}; {post}"
        elif s.cond is not None:
            header += " " + self._guard_expr(s.cond)
        self._emit(header + " {")
        self._block_body(s.body)
        self._emit("}")

    def _block_body(self, block: A.Block) -> None:
        self.indent += 1
        for stmt in block.stmts:
            self.stmt(stmt)
        self.indent -= 1

    # ── declarations ─────────────────────────────────────────────

    def decl(self, d: A.Decl) -> None:
        if isinstance(d, A.TypeDecl):
            self._type_decl(d)
        elif isinstance(d, A.FuncDecl):
            self._func_decl(d)
        elif isinstance(d, A.PredDecl):
            self._pred_decl(d)
        elif isinstance(d, A.ImplProofDecl):
            self._impl_proof(d)
        else:
            raise AssertionError(f"unknown decl {d!r}")
        self._emit("")

    def _clauses(self, spec: A.SpecClauses) -> None:
        for pre in spec.preconditions:
            self._emit("requires " + self.expr(pre))
        for post in spec.postconditions:
            self._emit("ensures " + self.expr(post))

    def _params_text(self, params: list[A.Param]) -> str:
        parts = []
        for p in params:
            if p.name:
                parts.append(f"{p.name} {self.type_text(p.type)}")
            else:
                parts.append(self.type_text(p.type))
        return ", ".join(parts)

    def _results_text(self, results: list[A.Param]) -> str:
        if not results:
            return ""
        if len(results) == 1 and not results[0].name:
            return " " + self.type_text(results[0].type)
        return " (" + self._params_text(results) + ")"

    def _func_decl(self, d: A.FuncDecl, keyword: str = "func") -> None:
        self._clauses(d.spec)
        head = ""
        if d.ghost:
            head += "ghost "
        if d.pure:
            head += "pure "
        if keyword:
            head += keyword + " "
        if d.receiver is not None:
            recv = d.receiver
            rtext = (f"{recv.name} " if recv.name else "") + self.type_text(recv.type)
            head += f"({rtext}) "
        head += f"{d.name}({self._params_text(d.params)})"
        head += self._results_text(d.results)
        if d.body is None:
            self._emit(head)
        else:
            self._emit(head + " {")
            self._block_body(d.body)
            self._emit("}")

    def _pred_decl(self, d: A.PredDecl) -> None:
        head = "pred "
        if d.receiver is not None:
            recv = d.receiver
            rtext = (f"{recv.name} " if recv.name else "") + self.type_text(recv.type)
            head += f"({rtext}) "
        head += f"{d.name}({self._params_text(d.params)})"
        if d.body is None:
            self._emit(head)
        else:
            self._emit(head + " {")
            self.indent += 1
            self._emit(self.expr(d.body))
            self.indent -= 1
            self._emit("}")

    def _type_decl(self, d: A.TypeDecl) -> None:
        if isinstance(d.underlying, A.InterfaceType):
            itf = d.underlying
            self._emit(f"type {d.name} interface {{")
            self.indent += 1
            for pred in itf.preds:
                self._emit(f"pred {pred.name}({self._params_text(pred.params)})")
                self._emit("")
            for m in itf.methods:
                self._clauses(m.spec)
                head = ("pure " if m.pure else "") + m.name
                head += f"({self._params_text(m.params)})"
                head += self._results_text(m.results)
                self._emit(head)
                self._emit("")
            self.indent -= 1
            self._emit("}")
        else:
            self._emit(f"type {d.name} {self.type_text(d.underlying)}")

    def _impl_proof(self, d: A.ImplProofDecl) -> None:
        self._emit(f"({self.type_text(d.impl_type)}) implements "
                   f"{self.type_text(d.itf_type)} {{")
        self.indent += 1
        for member in d.members:
            self._func_decl(member, keyword="")
            self._emit("")
        self.indent -= 1
        self._emit("}")

    def program(self, p: A.Program) -> str:
        self._emit(f"package {p.package_name}")
        self._emit("")
        for imp in p.imports:
            self._emit(f'import "{imp}"')
        if p.imports:
            self._emit("")
        for d in p.decls:
            self.decl(d)
        return "\n".join(self.lines).rstrip() + "\n"


def pretty_print(program: A.Program) -> str:
    return Printer().program(program)
