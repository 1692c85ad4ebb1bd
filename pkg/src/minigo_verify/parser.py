"""Recursive-descent parser for annotated MiniGo.

Expressions use precedence climbing with comparison chaining
(`0 <= k < len(s)` becomes a conjunction). Specification clauses attach to
the following declaration; `invariant` clauses attach to the following
`for`. Panic-mode recovery reports at most one error per top-level
declaration.
"""

from __future__ import annotations

from typing import Optional

from . import ast_nodes as A
from .errors import ParseError
from .lexer import T, Token, tokenize
from .source import SourceSpan

# Binding powers, lowest first. Comparisons are handled by chain parsing.
_IMPLIES_BP = 1
_TERNARY_BP = 2
_OR_BP = 3
_AND_BP = 4
_CMP_BP = 5
_ADD_BP = 6
_MUL_BP = 7

_CMP_OPS = {T.EQ: "==", T.NE: "!=", T.LT: "<", T.LE: "<=", T.GT: ">", T.GE: ">="}
_ADD_OPS = {T.PLUS: "+", T.MINUS: "-", T.PLUSPLUS: "++"}
_MUL_OPS = {T.STAR: "*", T.SLASH: "/", T.PERCENT: "%"}

_DECL_SYNC = {T.FUNC, T.PRED, T.TYPE, T.REQUIRES, T.ENSURES, T.PURE,
              T.GHOST, T.IMPORT, T.EOF}


class Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.toks = tokens
        self.pos = 0
        self.errors: list[ParseError] = []
        self.no_composite = 0      # >0 inside if/for headers

    # ── token access ─────────────────────────────────────────────

    def _cur(self) -> Token:
        return self.toks[self.pos]

    def _peek(self, offset: int = 1) -> Token:
        idx = min(self.pos + offset, len(self.toks) - 1)
        return self.toks[idx]

    def _at(self, *kinds: T) -> bool:
        return self._cur().kind in kinds

    def _advance(self) -> Token:
        tok = self._cur()
        if tok.kind is not T.EOF:
            self.pos += 1
        return tok

    def _accept(self, kind: T) -> Optional[Token]:
        if self._at(kind):
            return self._advance()
        return None

    def _expect(self, kind: T, what: str = "") -> Token:
        if self._at(kind):
            return self._advance()
        tok = self._cur()
        raise ParseError(tok.span, what or kind.name.lower(),
                         tok.text or tok.kind.name.lower())

    def _skip_semis(self) -> None:
        while self._at(T.SEMI):
            self._advance()

    # ── program ──────────────────────────────────────────────────

    def parse_program(self) -> A.Program:
        start = self._cur().span
        self._skip_semis()
        self._expect(T.PACKAGE, "package")
        pkg = self._expect(T.IDENT, "package name").text
        self._skip_semis()

        imports: list[str] = []
        while self._at(T.IMPORT):
            self._advance()
            imports.append(self._expect(T.STRING, "import path").text)
            self._skip_semis()

        decls: list[A.Decl] = []
        while not self._at(T.EOF):
            try:
                decl = self._parse_decl()
                if decl is not None:
                    decls.append(decl)
            except ParseError as err:
                self.errors.append(err)
                self._synchronize()
            self._skip_semis()

        end = self._cur().span
        return A.Program(start.to(end), pkg, imports, decls)

    def _synchronize(self) -> None:
        depth = 0
        while not self._at(T.EOF):
            k = self._cur().kind
            if k is T.LBRACE:
                depth += 1
            elif k is T.RBRACE:
                depth = max(depth - 1, 0)
            elif depth == 0 and k in _DECL_SYNC:
                return
            self._advance()

    # ── declarations ─────────────────────────────────────────────

    def _parse_decl(self) -> Optional[A.Decl]:
        self._skip_semis()
        if self._at(T.EOF):
            return None

        spec = A.SpecClauses()
        ghost = False
        pure = False
        start = self._cur().span
        while True:
            if self._at(T.REQUIRES):
                self._advance()
                spec.preconditions.append(self._parse_assertion())
                self._skip_semis()
            elif self._at(T.ENSURES):
                self._advance()
                spec.postconditions.append(self._parse_assertion())
                self._skip_semis()
            elif self._at(T.GHOST):
                self._advance()
                ghost = True
                self._skip_semis()
            elif self._at(T.PURE):
                self._advance()
                pure = True
            else:
                break

        tok = self._cur()
        if tok.kind is T.TYPE:
            self._no_spec(spec, pure, tok.span)
            return self._parse_type_decl()
        if tok.kind is T.FUNC:
            return self._parse_func_decl(start, spec, pure, ghost)
        if tok.kind is T.PRED:
            self._no_spec(spec, pure, tok.span)
            return self._parse_pred_decl(ghost)
        if tok.kind is T.LPAREN:
            self._no_spec(spec, pure, tok.span)
            return self._parse_impl_proof()
        raise ParseError(tok.span, "declaration", tok.text or tok.kind.name.lower())

    def _no_spec(self, spec: A.SpecClauses, pure: bool, span: SourceSpan) -> None:
        if spec.preconditions or spec.postconditions or pure:
            raise ParseError(span, "func after specification clauses",
                             self._cur().text)

    def _parse_type_decl(self) -> A.TypeDecl:
        start = self._expect(T.TYPE).span
        name = self._expect(T.IDENT, "type name").text
        underlying = self._parse_type()
        return A.TypeDecl(start.to(underlying.span), name, underlying)

    def _parse_func_decl(self, start: SourceSpan, spec: A.SpecClauses,
                         pure: bool, ghost: bool) -> A.FuncDecl:
        self._expect(T.FUNC)
        receiver = None
        if self._at(T.LPAREN):
            receiver = self._parse_receiver()
        name = self._expect(T.IDENT, "function name").text
        params = self._parse_params()
        results = self._parse_results()
        body = None
        if self._at(T.LBRACE):
            body = self._parse_block()
        end = body.span if body else self._cur().span
        return A.FuncDecl(start.to(end), name, spec, pure, ghost,
                          receiver, params, results, body)

    def _parse_pred_decl(self, ghost: bool) -> A.PredDecl:
        start = self._expect(T.PRED).span
        receiver = None
        if self._at(T.LPAREN):
            receiver = self._parse_receiver()
        name = self._expect(T.IDENT, "predicate name").text
        params = self._parse_params()
        body = None
        end = self._cur().span
        if self._at(T.LBRACE):
            self._advance()
            self._skip_semis()
            body = self._parse_assertion()
            self._skip_semis()
            end = self._expect(T.RBRACE).span
        return A.PredDecl(start.to(end), name, receiver, params, body)

    def _parse_impl_proof(self) -> A.ImplProofDecl:
        start = self._expect(T.LPAREN).span
        impl_type = self._parse_type()
        self._expect(T.RPAREN)
        self._expect(T.IMPLEMENTS, "implements")
        itf_type = self._parse_type()
        self._expect(T.LBRACE)
        self._skip_semis()
        members: list[A.FuncDecl] = []
        while not self._at(T.RBRACE, T.EOF):
            members.append(self._parse_proof_member())
            self._skip_semis()
        end = self._expect(T.RBRACE).span
        return A.ImplProofDecl(start.to(end), impl_type, itf_type, members)

    def _parse_proof_member(self) -> A.FuncDecl:
        start = self._cur().span
        pure = bool(self._accept(T.PURE))
        receiver = self._parse_receiver()
        name = self._expect(T.IDENT, "method name").text
        params = self._parse_params()
        results = self._parse_results()
        body = self._parse_block()
        return A.FuncDecl(start.to(body.span), name, A.SpecClauses(), pure,
                          False, receiver, params, results, body)

    def _parse_receiver(self) -> A.Param:
        start = self._expect(T.LPAREN).span
        name = ""
        if self._at(T.IDENT) and self._peek().kind in (T.STAR, T.IDENT):
            name = self._advance().text
        typ = self._parse_type()
        end = self._expect(T.RPAREN).span
        return A.Param(start.to(end), name, typ)

    def _parse_params(self) -> list[A.Param]:
        self._expect(T.LPAREN)
        params: list[A.Param] = []
        while not self._at(T.RPAREN, T.EOF):
            group_start = self.pos
            names: list[Token] = []
            # Try `name {, name} type`; fall back to anonymous type.
            while self._at(T.IDENT) and self._peek().kind is T.COMMA:
                names.append(self._advance())
                self._advance()
            if self._at(T.IDENT) and self._peek().kind not in (
                    T.COMMA, T.RPAREN, T.DOT):
                names.append(self._advance())
                typ = self._parse_type()
                for n in names:
                    params.append(A.Param(n.span.to(typ.span), n.text, typ))
            else:
                self.pos = group_start
                typ = self._parse_type()
                params.append(A.Param(typ.span, "", typ))
            if not self._accept(T.COMMA):
                break
        self._expect(T.RPAREN)
        return params

    def _parse_results(self) -> list[A.Param]:
        if self._at(T.LPAREN):
            return self._parse_params()
        if self._at(T.LBRACE, T.SEMI, T.EOF, T.RBRACE):
            return []
        typ = self._parse_type()
        return [A.Param(typ.span, "", typ)]

    # ── types ────────────────────────────────────────────────────

    def _parse_type(self) -> A.TypeExpr:
        tok = self._cur()
        if tok.kind is T.IDENT:
            self._advance()
            name = tok.text
            end = tok.span
            if self._at(T.DOT):
                self._advance()
                part = self._expect(T.IDENT, "qualified type name")
                name = f"{name}.{part.text}"
                end = part.span
            return A.NamedType(tok.span.to(end), name)
        if tok.kind is T.STAR:
            self._advance()
            elem = self._parse_type()
            return A.PointerType(tok.span.to(elem.span), elem)
        if tok.kind is T.LBRACKET:
            self._advance()
            if self._at(T.RBRACKET):
                self._advance()
                elem = self._parse_type()
                return A.SliceType(tok.span.to(elem.span), elem)
            size = self._expect(T.INT, "array length")
            self._expect(T.RBRACKET)
            elem = self._parse_type()
            return A.ArrayType(tok.span.to(elem.span), int(size.text), elem)
        if tok.kind is T.CHAN:
            self._advance()
            direction = "both"
            if self._accept(T.LARROW):
                direction = "send"
            elem = self._parse_type()
            return A.ChanType(tok.span.to(elem.span), elem, direction)
        if tok.kind is T.LARROW:
            self._advance()
            self._expect(T.CHAN, "chan")
            elem = self._parse_type()
            return A.ChanType(tok.span.to(elem.span), elem, "recv")
        if tok.kind is T.SEQ:
            self._advance()
            self._expect(T.LBRACKET)
            elem = self._parse_type()
            end = self._expect(T.RBRACKET).span
            return A.SeqType(tok.span.to(end), elem)
        if tok.kind is T.PRED:
            self._advance()
            self._expect(T.LPAREN)
            params: list[A.TypeExpr] = []
            while not self._at(T.RPAREN, T.EOF):
                params.append(self._parse_type())
                if not self._accept(T.COMMA):
                    break
            end = self._expect(T.RPAREN).span
            return A.PredType(tok.span.to(end), params)
        if tok.kind is T.STRUCT:
            return self._parse_struct_type()
        if tok.kind is T.INTERFACE:
            return self._parse_interface_type()
        raise ParseError(tok.span, "type", tok.text or tok.kind.name.lower())

    def _parse_struct_type(self) -> A.StructType:
        start = self._expect(T.STRUCT).span
        self._expect(T.LBRACE)
        fields: list[tuple[str, A.TypeExpr]] = []
        self._skip_semis()
        while not self._at(T.RBRACE, T.EOF):
            names = [self._expect(T.IDENT, "field name").text]
            while self._accept(T.COMMA):
                names.append(self._expect(T.IDENT, "field name").text)
            typ = self._parse_type()
            fields.extend((n, typ) for n in names)
            self._skip_semis()
        end = self._expect(T.RBRACE).span
        return A.StructType(start.to(end), fields)

    def _parse_interface_type(self) -> A.InterfaceType:
        start = self._expect(T.INTERFACE).span
        self._expect(T.LBRACE)
        preds: list[A.PredSig] = []
        methods: list[A.MethodSig] = []
        self._skip_semis()
        while not self._at(T.RBRACE, T.EOF):
            spec = A.SpecClauses()
            while self._at(T.REQUIRES, T.ENSURES):
                if self._advance().kind is T.REQUIRES:
                    spec.preconditions.append(self._parse_assertion())
                else:
                    spec.postconditions.append(self._parse_assertion())
                self._skip_semis()
            if self._at(T.PRED):
                pstart = self._advance().span
                name = self._expect(T.IDENT, "predicate name").text
                params = self._parse_params()
                preds.append(A.PredSig(pstart.to(self._cur().span), name, params))
            else:
                pure = bool(self._accept(T.PURE))
                name_tok = self._expect(T.IDENT, "method name")
                params = self._parse_params()
                results = self._parse_results()
                methods.append(A.MethodSig(
                    name_tok.span.to(self._cur().span), name_tok.text,
                    pure, params, results, spec))
            self._skip_semis()
        end = self._expect(T.RBRACE).span
        return A.InterfaceType(start.to(end), preds, methods)

    # ── statements ───────────────────────────────────────────────

    def _parse_block(self) -> A.Block:
        start = self._expect(T.LBRACE).span
        stmts: list[A.Stmt] = []
        self._skip_semis()
        while not self._at(T.RBRACE, T.EOF):
            stmts.append(self._parse_stmt())
            self._skip_semis()
        end = self._expect(T.RBRACE).span
        return A.Block(start.to(end), stmts)

    def _parse_stmt(self) -> A.Stmt:
        tok = self._cur()
        if tok.kind is T.INVARIANT or tok.kind is T.FOR:
            return self._parse_for()
        if tok.kind is T.IF:
            return self._parse_if()
        if tok.kind is T.VAR:
            return self._parse_var_decl(ghost=False)
        if tok.kind is T.RETURN:
            return self._parse_return()
        if tok.kind is T.GO:
            return self._parse_go()
        if tok.kind is T.GHOST:
            return self._parse_ghost()
        if tok.kind in (T.FOLD, T.UNFOLD):
            return self._parse_fold()
        if tok.kind is T.ASSERT:
            self._advance()
            assertion = self._parse_assertion()
            return A.AssertStmt(tok.span.to(assertion.span), assertion)
        if tok.kind is T.LBRACE:
            return self._parse_block()
        return self._parse_simple_stmt()

    def _parse_ghost(self) -> A.Stmt:
        start = self._expect(T.GHOST).span
        if self._at(T.LBRACE):
            body = self._parse_block()
            return A.GhostBlock(start.to(body.span), body)
        if self._at(T.INVARIANT, T.FOR):
            body_for = self._parse_for()
            return A.GhostBlock(start.to(body_for.span),
                                A.Block(body_for.span, [body_for]))
        if self._at(T.VAR):
            stmt = self._parse_var_decl(ghost=True)
            return stmt
        if self._at(T.IF):
            if_stmt = self._parse_if()
            if_stmt.ghost = True
            if_stmt.span = start.to(if_stmt.span)
            return if_stmt
        simple = self._parse_simple_stmt()
        if isinstance(simple, (A.ShortDecl, A.Assign, A.ExprStmt)):
            simple.ghost = True
        simple.span = start.to(simple.span)
        return simple

    def _parse_var_decl(self, ghost: bool) -> A.VarDecl:
        start = self._expect(T.VAR).span
        name = self._expect(T.IDENT, "variable name").text
        shared = bool(self._accept(T.AT))
        typ = None
        init = None
        if not self._at(T.ASSIGN, T.SEMI):
            typ = self._parse_type()
        if self._accept(T.ASSIGN):
            init = self._parse_expr()
        end = init.span if init else (typ.span if typ else self._cur().span)
        return A.VarDecl(start.to(end), name, shared, typ, init, ghost)

    def _parse_return(self) -> A.Return:
        start = self._expect(T.RETURN).span
        values: list[A.Expr] = []
        if not self._at(T.SEMI, T.RBRACE):
            values.append(self._parse_expr())
            while self._accept(T.COMMA):
                values.append(self._parse_expr())
        end = values[-1].span if values else start
        return A.Return(start.to(end), values)

    def _parse_go(self) -> A.GoStmt:
        start = self._expect(T.GO).span
        call = self._parse_expr()
        if not isinstance(call, A.Call):
            raise ParseError(call.span, "call after go", "expression")
        return A.GoStmt(start.to(call.span), call)

    def _parse_fold(self) -> A.FoldStmt:
        tok = self._advance()
        unfold = tok.kind is T.UNFOLD
        inst = self._parse_acc_or_instance()
        return A.FoldStmt(tok.span.to(inst.span), unfold, inst)

    def _parse_acc_or_instance(self) -> A.AccAssertion:
        if self._at(T.ACC):
            acc = self._parse_atom()
            assert isinstance(acc, A.AccAssertion)
            return acc
        expr = self._parse_expr()
        return A.AccAssertion(expr.span, expr, None)

    def _parse_if(self) -> A.If:
        start = self._expect(T.IF).span
        self.no_composite += 1
        cond = self._parse_expr()
        self.no_composite -= 1
        then = self._parse_block()
        other: Optional[A.Stmt] = None
        end = then.span
        if self._accept(T.ELSE):
            other = self._parse_if() if self._at(T.IF) else self._parse_block()
            end = other.span
        return A.If(start.to(end), cond, then, other)

    def _parse_for(self) -> A.For:
        invariants: list[A.Expr] = []
        start = self._cur().span
        while self._at(T.INVARIANT):
            self._advance()
            invariants.append(self._parse_assertion())
            self._skip_semis()
        self._expect(T.FOR, "for after invariants")
        self.no_composite += 1
        init: Optional[A.Stmt] = None
        cond: Optional[A.Expr] = None
        post: Optional[A.Stmt] = None
        if not self._at(T.LBRACE):
            first: Optional[A.Stmt] = None
            if not self._at(T.SEMI):
                first = self._parse_simple_stmt()
            if self._at(T.SEMI):
                init = first
                self._advance()
                if not self._at(T.SEMI):
                    cond = self._parse_expr()
                self._expect(T.SEMI)
                if not self._at(T.LBRACE):
                    post = self._parse_simple_stmt()
            else:
                # condition-only loop: `for cond { ... }`
                if isinstance(first, A.ExprStmt):
                    cond = first.expr
                else:
                    raise ParseError(self._cur().span, "';' or '{'",
                                     self._cur().text)
        self.no_composite -= 1
        body = self._parse_block()
        return A.For(start.to(body.span), invariants, init, cond, post, body)

    def _parse_simple_stmt(self) -> A.Stmt:
        start = self._cur().span
        # identifier list for := / = forms
        exprs = [self._parse_expr()]
        while self._accept(T.COMMA):
            exprs.append(self._parse_expr())

        shared = False
        if self._at(T.AT):
            if len(exprs) == 1 and isinstance(exprs[0], A.Ident):
                self._advance()
                shared = True
            else:
                raise ParseError(self._cur().span, "declaration before '@'",
                                 "@")

        if self._accept(T.DEFINE):
            names = []
            for e in exprs:
                if not isinstance(e, A.Ident):
                    raise ParseError(e.span, "identifier on left of :=",
                                     "expression")
                names.append(e.name)
            rhs = self._parse_expr()
            return A.ShortDecl(start.to(rhs.span), names, shared, rhs)
        if shared:
            raise ParseError(self._cur().span, ":= after '@'", self._cur().text)
        if self._accept(T.ASSIGN):
            rhs = self._parse_expr()
            return A.Assign(start.to(rhs.span), exprs, rhs)
        if len(exprs) == 1:
            e = exprs[0]
            if self._at(T.PLUSEQ, T.MINUSEQ):
                op = "+" if self._advance().kind is T.PLUSEQ else "-"
                rhs = self._parse_expr()
                return A.OpAssign(start.to(rhs.span), e, op, rhs)
            if self._at(T.PLUSPLUS, T.MINUSMINUS):
                tok = self._advance()
                op = "++" if tok.kind is T.PLUSPLUS else "--"
                return A.IncDec(start.to(tok.span), e, op)
            if self._at(T.LARROW):
                self._advance()
                value = self._parse_expr()
                return A.SendStmt(start.to(value.span), e, value)
            return A.ExprStmt(e.span, e)
        raise ParseError(self._cur().span, ":= or =", self._cur().text)

    # ── expressions ──────────────────────────────────────────────

    def _parse_assertion(self) -> A.Expr:
        return self._parse_expr()

    def _parse_expr(self, min_bp: int = 0) -> A.Expr:
        left = self._parse_unary()
        return self._parse_binary_rhs(left, min_bp)

    def _parse_binary_rhs(self, left: A.Expr, min_bp: int) -> A.Expr:
        while True:
            kind = self._cur().kind
            if kind in _CMP_OPS and _CMP_BP >= min_bp:
                left = self._parse_cmp_chain(left)
            elif (kind is T.PLUSPLUS and self._peek().kind in (
                    T.SEMI, T.RBRACE, T.LBRACE, T.EOF, T.COMMA, T.RPAREN)):
                return left  # increment statement, not seq concatenation
            elif kind in _ADD_OPS and _ADD_BP >= min_bp:
                op = _ADD_OPS[self._advance().kind]
                right = self._parse_expr(_ADD_BP + 1)
                left = A.Binary(left.span.to(right.span), op, left, right)
            elif kind in _MUL_OPS and _MUL_BP >= min_bp:
                op = _MUL_OPS[self._advance().kind]
                right = self._parse_expr(_MUL_BP + 1)
                left = A.Binary(left.span.to(right.span), op, left, right)
            elif kind is T.AND and _AND_BP >= min_bp:
                self._advance()
                right = self._parse_expr(_AND_BP + 1)
                left = A.Binary(left.span.to(right.span), "&&", left, right)
            elif kind is T.OR and _OR_BP >= min_bp:
                self._advance()
                right = self._parse_expr(_OR_BP + 1)
                left = A.Binary(left.span.to(right.span), "||", left, right)
            elif kind is T.QUESTION and _TERNARY_BP >= min_bp:
                self._advance()
                then = self._parse_expr(_TERNARY_BP)
                self._expect(T.COLON, "':' in conditional")
                other = self._parse_expr(_TERNARY_BP)
                left = A.Ternary(left.span.to(other.span), left, then, other)
            elif kind is T.IMPLIES and _IMPLIES_BP >= min_bp:
                self._advance()
                right = self._parse_expr(_IMPLIES_BP)  # right associative
                left = A.Binary(left.span.to(right.span), "==>", left, right)
            else:
                return left

    def _parse_cmp_chain(self, left: A.Expr) -> A.Expr:
        links: list[tuple[str, A.Expr]] = []
        while self._cur().kind in _CMP_OPS:
            op = _CMP_OPS[self._advance().kind]
            right = self._parse_expr(_CMP_BP + 1)
            links.append((op, right))
        assert links
        operand = left
        result: Optional[A.Expr] = None
        for op, right in links:
            cmp = A.Binary(operand.span.to(right.span), op, operand, right)
            result = cmp if result is None else A.Binary(
                result.span.to(cmp.span), "&&", result, cmp)
            operand = right
        assert result is not None
        return result

    def _parse_unary(self) -> A.Expr:
        tok = self._cur()
        if tok.kind is T.MINUS:
            self._advance()
            operand = self._parse_unary()
            return A.Unary(tok.span.to(operand.span), "-", operand)
        if tok.kind is T.NOT:
            self._advance()
            operand = self._parse_unary()
            return A.Unary(tok.span.to(operand.span), "!", operand)
        if tok.kind is T.STAR:
            self._advance()
            operand = self._parse_unary()
            return A.Deref(tok.span.to(operand.span), operand)
        if tok.kind is T.AMP:
            self._advance()
            operand = self._parse_unary()
            return A.AddrOf(tok.span.to(operand.span), operand)
        if tok.kind is T.LARROW:
            self._advance()
            operand = self._parse_unary()
            return A.Recv(tok.span.to(operand.span), operand)
        return self._parse_postfix(self._parse_atom())

    def _parse_postfix(self, expr: A.Expr) -> A.Expr:
        while True:
            if self._at(T.DOT):
                self._advance()
                if self._at(T.LPAREN):
                    self._advance()
                    typ = self._parse_type()
                    end = self._expect(T.RPAREN).span
                    expr = A.TypeAssert(expr.span.to(end), expr, typ)
                else:
                    name = self._expect(T.IDENT, "field or method name")
                    expr = A.FieldSel(expr.span.to(name.span), expr, name.text)
            elif self._at(T.LPAREN):
                self._advance()
                args: list[A.Expr] = []
                while not self._at(T.RPAREN, T.EOF):
                    args.append(self._parse_expr())
                    if not self._accept(T.COMMA):
                        break
                end = self._expect(T.RPAREN).span
                expr = A.Call(expr.span.to(end), expr, args)
            elif self._at(T.LBRACKET):
                self._advance()
                lo: Optional[A.Expr] = None
                if not self._at(T.COLON):
                    lo = self._parse_expr()
                if self._accept(T.COLON):
                    hi: Optional[A.Expr] = None
                    if not self._at(T.RBRACKET):
                        hi = self._parse_expr()
                    end = self._expect(T.RBRACKET).span
                    expr = A.Slicing(expr.span.to(end), expr, lo, hi)
                else:
                    end = self._expect(T.RBRACKET).span
                    assert lo is not None
                    expr = A.Index(expr.span.to(end), expr, lo)
            elif (self._at(T.LBRACE) and self.no_composite == 0
                  and isinstance(expr, (A.Ident, A.FieldSel))):
                expr = self._parse_braced_args(expr)
            else:
                return expr

    def _parse_braced_args(self, callee: A.Expr) -> A.PartialApp:
        self._expect(T.LBRACE)
        args: list[Optional[A.Expr]] = []
        while not self._at(T.RBRACE, T.EOF):
            if self._at(T.UNDERSCORE):
                self._advance()
                args.append(None)
            else:
                args.append(self._parse_expr())
            if not self._accept(T.COMMA):
                break
        end = self._expect(T.RBRACE).span
        return A.PartialApp(callee.span.to(end), callee, args)

    def _parse_atom(self) -> A.Expr:
        tok = self._cur()
        if tok.kind is T.INT:
            self._advance()
            return A.IntLit(tok.span, int(tok.text))
        if tok.kind in (T.TRUE, T.FALSE):
            self._advance()
            return A.BoolLit(tok.span, tok.kind is T.TRUE)
        if tok.kind is T.IDENT:
            self._advance()
            return A.Ident(tok.span, tok.text)
        if tok.kind is T.LPAREN:
            self._advance()
            save = self.no_composite
            self.no_composite = 0
            expr = self._parse_expr()
            self.no_composite = save
            self._expect(T.RPAREN)
            return expr
        if tok.kind is T.LBRACKET:
            return self._parse_array_lit()
        if tok.kind is T.SEQ:
            return self._parse_seq_lit()
        if tok.kind is T.MAKE:
            self._advance()
            self._expect(T.LPAREN)
            typ = self._parse_type()
            args: list[A.Expr] = []
            while self._accept(T.COMMA):
                args.append(self._parse_expr())
            end = self._expect(T.RPAREN).span
            return A.MakeExpr(tok.span.to(end), typ, args)
        if tok.kind is T.ACC:
            self._advance()
            self._expect(T.LPAREN)
            save = self.no_composite
            self.no_composite = 0
            target = self._parse_expr()
            amount: Optional[A.PermExpr] = None
            if self._accept(T.COMMA):
                amount = self._parse_perm()
            self.no_composite = save
            end = self._expect(T.RPAREN).span
            return A.AccAssertion(tok.span.to(end), target, amount)
        if tok.kind is T.OLD:
            self._advance()
            self._expect(T.LPAREN)
            operand = self._parse_expr()
            end = self._expect(T.RPAREN).span
            return A.OldExpr(tok.span.to(end), operand)
        if tok.kind is T.LEN:
            self._advance()
            self._expect(T.LPAREN)
            operand = self._parse_expr()
            end = self._expect(T.RPAREN).span
            return A.LenExpr(tok.span.to(end), operand)
        if tok.kind is T.TYPEOF:
            self._advance()
            self._expect(T.LPAREN)
            operand = self._parse_expr()
            end = self._expect(T.RPAREN).span
            return A.TypeOfExpr(tok.span.to(end), operand)
        if tok.kind is T.UNFOLDING:
            self._advance()
            inst = self._parse_acc_or_instance()
            self._expect(T.IN, "in")
            body = self._parse_expr()
            return A.Unfolding(tok.span.to(body.span), inst, body)
        if tok.kind is T.FORALL:
            return self._parse_forall()
        raise ParseError(tok.span, "expression", tok.text or tok.kind.name.lower())

    def _parse_forall(self) -> A.Forall:
        start = self._expect(T.FORALL).span
        names = [self._expect(T.IDENT, "bound variable").text]
        while self._accept(T.COMMA):
            names.append(self._expect(T.IDENT, "bound variable").text)
        var_type = self._parse_type()
        self._expect(T.DCOLON, "'::'")
        trigger: Optional[A.Expr] = None
        if self._at(T.LBRACE):
            self._advance()
            trigger = self._parse_expr()
            self._expect(T.RBRACE)
        save = self.no_composite
        self.no_composite = 0
        body = self._parse_expr()
        self.no_composite = save
        return A.Forall(start.to(body.span), names, var_type, trigger, body)

    def _parse_perm(self) -> A.PermExpr:
        tok = self._cur()
        if tok.kind is T.UNDERSCORE:
            self._advance()
            return A.PermExpr(tok.span, wildcard=True)
        num = self._expect(T.INT, "permission amount")
        if self._accept(T.SLASH):
            den = self._expect(T.INT, "permission denominator")
            return A.PermExpr(num.span.to(den.span), False,
                              int(num.text), int(den.text))
        return A.PermExpr(num.span, False, int(num.text), 1)

    def _parse_array_lit(self) -> A.CompositeLit:
        start = self._cur().span
        typ = self._parse_type()
        self._expect(T.LBRACE)
        elems: list[A.Expr] = []
        while not self._at(T.RBRACE, T.EOF):
            elems.append(self._parse_expr())
            if not self._accept(T.COMMA):
                break
        end = self._expect(T.RBRACE).span
        return A.CompositeLit(start.to(end), typ, elems)

    def _parse_seq_lit(self) -> A.SeqLit:
        start = self._expect(T.SEQ).span
        self._expect(T.LBRACKET)
        elem = self._parse_type()
        self._expect(T.RBRACKET)
        self._expect(T.LBRACE)
        elems: list[A.Expr] = []
        while not self._at(T.RBRACE, T.EOF):
            elems.append(self._parse_expr())
            if not self._accept(T.COMMA):
                break
        end = self._expect(T.RBRACE).span
        return A.SeqLit(start.to(end), elem, elems)


def parse_program(tokens: list[Token]) -> A.Program:
    """Parse a token stream into a Program; raises the first ParseError."""
    parser = Parser(tokens)
    program = parser.parse_program()
    if parser.errors:
        err = parser.errors[0]
        err.all_errors = parser.errors  # type: ignore[attr-defined]
        raise err
    return program


def parse_source(source: str, filename: str = "<input>") -> A.Program:
    return parse_program(tokenize(source, filename))
