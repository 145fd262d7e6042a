"""Recursive-descent parser for ``.mpl`` sources."""

from __future__ import annotations

import itertools

from autopar.errors import ParseError
from autopar.frontend import ast as A
from autopar.frontend.lexer import Token, tokenize

BASE_TYPES = ("int", "float", "bool", "void")

# binary operator precedence, lowest first
_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, source: str, filename: str = "<input>"):
        self.tokens = tokenize(source, filename)
        self.pos = 0
        self.filename = filename
        self._ids = itertools.count(1)

    # -- token helpers -------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("op", "keyword") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            self.error(f"expected '{text}'", [text])
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error("expected identifier", ["identifier"])
        return self.advance()

    def error(self, message, expected=()):
        found = self.tok.text or "end of file"
        raise ParseError(f"{message}, found '{found}'", self.tok.span, expected)

    def mk(self, cls, tok, *args, **kw):
        return cls(*args, nid=next(self._ids), span=tok.span, **kw)

    # -- declarations --------------------------------------------------------

    def parse_program(self) -> A.Program:
        functions = []
        reductions = []
        while self.tok.kind != "eof":
            if self.at("@"):
                reductions.append(self.parse_reduce())
            else:
                functions.append(self.parse_function())
        prog = A.Program(functions, reductions, source_name=self.filename)
        prog.next_nid = next(self._ids)
        return prog

    def parse_reduce(self) -> A.ReduceDecl:
        at = self.expect("@")
        name = self.expect_ident()
        if name.text != "reduce":
            raise ParseError(f"unknown annotation '@{name.text}'", name.span, ["reduce"])
        self.expect("(")
        op = self.expect_ident()
        self.expect(",")
        identity = self.parse_expr()
        self.expect(")")
        self.expect(";")
        return self.mk(A.ReduceDecl, at, op.text, identity)

    def at_type(self) -> bool:
        return self.tok.kind == "keyword" and self.tok.text in BASE_TYPES

    def parse_type(self) -> A.Type:
        if not self.at_type():
            self.error("expected type", BASE_TYPES)
        base = self.advance().text
        if self.at("["):
            self.advance()
            self.expect("]")
            return A.Type(base, True)
        return A.Type(base)

    def parse_function(self) -> A.FunctionDecl:
        start = self.tok
        ret = self.parse_type()
        name = self.expect_ident()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                ptok = self.tok
                ptype = self.parse_type()
                pname = self.expect_ident()
                params.append(self.mk(A.Param, ptok, pname.text, ptype))
                if not self.at(","):
                    break
                self.advance()
        self.expect(")")
        body = self.parse_block()
        fn = self.mk(A.FunctionDecl, start, name.text, params, ret, body)
        return fn

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> A.Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block", ["}"])
            stmts.append(self.parse_stmt())
        self.advance()
        return self.mk(A.Block, start, stmts)

    def parse_body(self) -> A.Block:
        if self.at("{"):
            return self.parse_block()
        start = self.tok
        return self.mk(A.Block, start, [self.parse_stmt()])

    def parse_stmt(self):
        t = self.tok
        if self.at("{"):
            return self.parse_block()
        if self.at("if"):
            return self.parse_if()
        if self.at("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            return self.mk(A.While, t, cond, self.parse_body())
        if self.at("for"):
            return self.parse_for()
        if self.at("return"):
            self.advance()
            value = None if self.at(";") else self.parse_expr()
            self.expect(";")
            return self.mk(A.Return, t, value)
        if self.at("break"):
            self.advance()
            self.expect(";")
            return self.mk(A.Break, t)
        if self.at("continue"):
            self.advance()
            self.expect(";")
            return self.mk(A.Continue, t)
        stmt = self.parse_simple()
        self.expect(";")
        return stmt

    def parse_if(self) -> A.If:
        t = self.expect("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_body()
        orelse = None
        if self.at("else"):
            self.advance()
            if self.at("if"):
                inner_tok = self.tok
                orelse = self.mk(A.Block, inner_tok, [self.parse_if()])
            else:
                orelse = self.parse_body()
        return self.mk(A.If, t, cond, then, orelse)

    def parse_for(self):
        t = self.expect("for")
        self.expect("(")
        if self.at_type() and self.peek(1).kind == "ident" and self.peek(2).text == ":":
            elem = self.parse_type()
            name = self.expect_ident()
            self.expect(":")
            arr = self.parse_expr()
            self.expect(")")
            return self.mk(A.ForEach, t, elem, name.text, arr, self.parse_body())
        init = None if self.at(";") else self.parse_simple()
        self.expect(";")
        cond = None if self.at(";") else self.parse_expr()
        self.expect(";")
        step = None if self.at(")") else self.parse_simple()
        self.expect(")")
        return self.mk(A.For, t, init, cond, step, self.parse_body())

    def parse_simple(self):
        """Declaration, assignment, array store or expression statement (no ';')."""
        t = self.tok
        if self.at_type():
            ty = self.parse_type()
            name = self.expect_ident()
            init = None
            if self.at("="):
                self.advance()
                init = self.parse_expr()
            return self.mk(A.VarDecl, t, ty, name.text, init)
        if t.kind == "ident" and self.peek().text == "=" and self.peek().kind == "op":
            self.advance()
            self.advance()
            return self.mk(A.Assign, t, t.text, self.parse_expr())
        expr = self.parse_expr()
        if self.at("="):
            if not isinstance(expr, A.Index):
                self.error("invalid assignment target", ["identifier", "array element"])
            self.advance()
            value = self.parse_expr()
            return self.mk(A.ArrayStore, t, expr.array.name, expr.index, value)
        return self.mk(A.ExprStmt, t, expr)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self, level=0):
        if level == len(_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _LEVELS[level]:
            op = self.advance()
            right = self.parse_expr(level + 1)
            left = self.mk(A.BinOp, op, op.text, left, right)
        return left

    def parse_unary(self):
        if self.at("-", "!"):
            op = self.advance()
            operand = self.parse_unary()
            if op.text == "-" and isinstance(operand, (A.IntLit, A.FloatLit)):
                operand.value = -operand.value
                return operand
            return self.mk(A.UnaryOp, op, op.text, operand)
        return self.parse_postfix()

    def parse_postfix(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return self.mk(A.IntLit, t, int(t.text))
        if t.kind == "float":
            self.advance()
            return self.mk(A.FloatLit, t, float(t.text))
        if self.at("true", "false"):
            self.advance()
            return self.mk(A.BoolLit, t, t.text == "true")
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.at("new"):
            self.advance()
            if not self.at_type():
                self.error("expected element type", BASE_TYPES)
            elem = A.Type(self.advance().text)
            self.expect("[")
            size = self.parse_expr()
            self.expect("]")
            return self.mk(A.NewArray, t, elem, size)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.parse_expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.parse_expr())
                self.expect(")")
                return self.mk(A.Call, t, t.text, args)
            var = self.mk(A.Var, t, t.text)
            if self.at("["):
                self.advance()
                index = self.parse_expr()
                self.expect("]")
                return self.mk(A.Index, t, var, index)
            return var
        self.error("expected expression", ["literal", "identifier", "(", "new"])


def parse(source: str, filename: str = "<input>") -> A.Program:
    """Parse without name resolution."""
    return Parser(source, filename).parse_program()
