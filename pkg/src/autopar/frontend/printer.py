from __future__ import annotations

from autopar.frontend import ast as A

_PREC = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
_UNARY = 7


def format_expr(e, parent_prec=0, right=False) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value)
    if isinstance(e, A.FloatLit):
        return repr(float(e.value))
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Index):
        return f"{e.array.name}[{format_expr(e.index)}]"
    if isinstance(e, A.Call):
        return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, A.NewArray):
        return f"new {e.elem.base}[{format_expr(e.size)}]"
    if isinstance(e, A.UnaryOp):
        return e.op + format_expr(e.operand, _UNARY)
    if isinstance(e, A.BinOp):
        prec = _PREC[e.op]
        text = f"{format_expr(e.left, prec)} {e.op} {format_expr(e.right, prec, True)}"
        # left-associative: a right operand of equal precedence needs parens
        if prec < parent_prec or (right and prec == parent_prec):
            return f"({text})"
        return text
    # plan nodes know how to print themselves
    return e.format()


def format_simple(s) -> str:
    if isinstance(s, A.VarDecl):
        if s.init is None:
            return f"{s.type} {s.name}"
        return f"{s.type} {s.name} = {format_expr(s.init)}"
    if isinstance(s, A.Assign):
        return f"{s.name} = {format_expr(s.value)}"
    if isinstance(s, A.ArrayStore):
        return f"{s.name}[{format_expr(s.index)}] = {format_expr(s.value)}"
    if isinstance(s, A.ExprStmt):
        return format_expr(s.expr)
    raise TypeError(s)


class Printer:
    """Source printer. ``annotate(stmt)`` may return an end-of-line comment."""

    indent_unit = "    "

    def __init__(self, annotate=None):
        self.annotate = annotate
        self.lines = []

    def emit(self, depth, text, node=None):
        note = self.annotate(node) if (self.annotate and node is not None) else None
        line = self.indent_unit * depth + text
        if note:
            line += " // " + note
        self.lines.append(line)

    def program(self, prog: A.Program) -> str:
        for red in prog.reductions:
            self.emit(0, f"@reduce({red.op}, {format_expr(red.identity)});")
        for i, fn in enumerate(prog.functions):
            if i or prog.reductions:
                self.lines.append("")
            self.function(fn)
        return "\n".join(self.lines) + "\n"

    def function(self, fn: A.FunctionDecl, name=None):
        params = ", ".join(f"{p.type} {p.name}" for p in fn.params)
        self.emit(0, f"{fn.return_type} {name or fn.name}({params}) {{", fn)
        self.stmts(fn.body.stmts, 1)
        self.emit(0, "}")

    def stmts(self, stmts, depth):
        for s in stmts:
            self.stmt(s, depth)

    def stmt(self, s, depth):
        if isinstance(s, A.Block):
            self.emit(depth, "{", s)
            self.stmts(s.stmts, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, A.If):
            self.emit(depth, f"if ({format_expr(s.cond)}) {{", s)
            self.stmts(s.then.stmts, depth + 1)
            node = s
            while node.orelse is not None:
                ob = node.orelse
                if len(ob.stmts) == 1 and isinstance(ob.stmts[0], A.If):
                    node = ob.stmts[0]
                    self.emit(depth, f"}} else if ({format_expr(node.cond)}) {{", node)
                    self.stmts(node.then.stmts, depth + 1)
                else:
                    self.emit(depth, "} else {")
                    self.stmts(ob.stmts, depth + 1)
                    break
            self.emit(depth, "}")
        elif isinstance(s, A.While):
            self.emit(depth, f"while ({format_expr(s.cond)}) {{", s)
            self.stmts(s.body.stmts, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, A.For):
            init = format_simple(s.init) if s.init else ""
            cond = format_expr(s.cond) if s.cond else ""
            step = format_simple(s.step) if s.step else ""
            self.emit(depth, f"for ({init}; {cond}; {step}) {{", s)
            self.stmts(s.body.stmts, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, A.ForEach):
            self.emit(depth, f"for ({s.elem} {s.name} : {format_expr(s.array)}) {{", s)
            self.stmts(s.body.stmts, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, A.Return):
            text = "return;" if s.value is None else f"return {format_expr(s.value)};"
            self.emit(depth, text, s)
        elif isinstance(s, A.Break):
            self.emit(depth, "break;", s)
        elif isinstance(s, A.Continue):
            self.emit(depth, "continue;", s)
        elif isinstance(s, (A.VarDecl, A.Assign, A.ArrayStore, A.ExprStmt)):
            self.emit(depth, format_simple(s) + ";", s)
        else:
            s.print_into(self, depth)


def format_program(prog: A.Program, annotate=None) -> str:
    return Printer(annotate).program(prog)
