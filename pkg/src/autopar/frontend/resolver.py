"""Name resolution, slot assignment and scalar type checking."""

from __future__ import annotations

from autopar.errors import ResolveError
from autopar.frontend import ast as A
from autopar.frontend.parser import parse

NUMERIC = ("int", "float")

# name -> (parameter types or None for variadic, return type)
# "num" means int or float and the result follows the arguments.
BUILTINS = {
    "print": (None, A.VOID),
    "sqrt": ((A.FLOAT,), A.FLOAT),
    "sin": ((A.FLOAT,), A.FLOAT),
    "cos": ((A.FLOAT,), A.FLOAT),
    "exp": ((A.FLOAT,), A.FLOAT),
    "log": ((A.FLOAT,), A.FLOAT),
    "fabs": ((A.FLOAT,), A.FLOAT),
    "floor": ((A.FLOAT,), A.FLOAT),
    "pow": ((A.FLOAT, A.FLOAT), A.FLOAT),
    "abs": (("num",), "num"),
    "min": (("num", "num"), "num"),
    "max": (("num", "num"), "num"),
    "toint": ((A.FLOAT,), A.INT),
    "tofloat": ((A.INT,), A.FLOAT),
    "len": (("array",), A.INT),
    "sleep_ms": ((A.INT,), A.VOID),
    "heavy_op": ((A.INT,), A.FLOAT),
}


def assignable(target: A.Type, value: A.Type) -> bool:
    if target == value:
        return True
    return target == A.FLOAT and value == A.INT


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names = {}

    def lookup(self, name):
        scope = self
        while scope is not None:
            if name in scope.names:
                return scope.names[name]
            scope = scope.parent
        return None


class Resolver:
    def __init__(self, program: A.Program):
        self.program = program
        self.functions = {}

    def err(self, message, node):
        raise ResolveError(message, getattr(node, "span", None))

    def resolve(self) -> A.Program:
        prog = self.program
        for fn in prog.functions:
            if fn.name in self.functions:
                self.err(f"duplicate function '{fn.name}'", fn)
            if fn.name in BUILTINS:
                self.err(f"function '{fn.name}' shadows a builtin", fn)
            if fn.return_type.array:
                self.err(f"function '{fn.name}' cannot return an array", fn)
            self.functions[fn.name] = fn
        if prog.entry not in self.functions:
            raise ResolveError(f"no entry function '{prog.entry}'")
        entry = self.functions[prog.entry]
        for p in entry.params:
            if not p.type.scalar:
                self.err("entry function may only take scalar parameters", p)
        for fn in prog.functions:
            self.resolve_function(fn)
        for red in prog.reductions:
            self.resolve_reduce(red)
        return prog

    def resolve_reduce(self, red: A.ReduceDecl):
        fn = self.functions.get(red.op)
        if fn is None:
            self.err(f"undefined reduction operator '{red.op}'", red)
        if len(fn.params) != 2 or not fn.return_type.scalar or any(
            p.type != fn.return_type for p in fn.params
        ):
            self.err(f"reduction operator '{red.op}' must have type (T, T) -> T", red)
        if not isinstance(red.identity, (A.IntLit, A.FloatLit, A.BoolLit)):
            self.err("reduction identity must be a literal", red.identity)
        self.expr(red.identity, _Scope())

    # -- functions -----------------------------------------------------------

    def resolve_function(self, fn: A.FunctionDecl):
        self.fn = fn
        self.next_slot = 1  # slot 0 holds the return value
        self.uids = {}
        self.loop_depth = 0
        scope = _Scope()
        for p in fn.params:
            if p.type.base == "void":
                self.err("parameter cannot be void", p)
            p.sym = self.declare(scope, p.name, p.type, p, is_param=True)
        self.block(fn.body, _Scope(scope))
        fn.nslots = self.next_slot

    def declare(self, scope, name, ty, node, is_param=False):
        if name in scope.names:
            self.err(f"duplicate declaration of '{name}'", node)
        if name in self.functions or name in BUILTINS:
            self.err(f"'{name}' shadows a function", node)
        n = self.uids.get(name, 0)
        self.uids[name] = n + 1
        uid = name if n == 0 else f"{name}#{n}"
        sym = A.Symbol(name, uid, ty, self.next_slot, self.fn.name, is_param)
        self.next_slot += 1
        scope.names[name] = sym
        return sym

    def lookup(self, scope, name, node):
        sym = scope.lookup(name)
        if sym is None:
            self.err(f"undefined identifier '{name}'", node)
        return sym

    # -- statements ----------------------------------------------------------

    def block(self, block: A.Block, scope):
        for stmt in block.stmts:
            self.stmt(stmt, scope)

    def stmt(self, s, scope):
        if isinstance(s, A.Block):
            self.block(s, _Scope(scope))
        elif isinstance(s, A.VarDecl):
            if s.type.base == "void":
                self.err("variable cannot be void", s)
            if s.init is not None:
                ty = self.expr(s.init, scope)
                if not assignable(s.type, ty):
                    self.err(f"cannot initialise {s.type} '{s.name}' with {ty}", s)
            s.sym = self.declare(scope, s.name, s.type, s)
        elif isinstance(s, A.Assign):
            s.sym = self.lookup(scope, s.name, s)
            ty = self.expr(s.value, scope)
            if not assignable(s.sym.type, ty):
                self.err(f"cannot assign {ty} to {s.sym.type} '{s.name}'", s)
        elif isinstance(s, A.ArrayStore):
            s.sym = self.lookup(scope, s.name, s)
            if not s.sym.type.array:
                self.err(f"'{s.name}' is not an array", s)
            if self.expr(s.index, scope) != A.INT:
                self.err("array index must be int", s.index)
            ty = self.expr(s.value, scope)
            if not assignable(A.Type(s.sym.type.base), ty):
                self.err(f"cannot store {ty} into {s.sym.type}", s)
        elif isinstance(s, A.If):
            self.cond(s.cond, scope)
            self.block(s.then, _Scope(scope))
            if s.orelse is not None:
                self.block(s.orelse, _Scope(scope))
        elif isinstance(s, A.While):
            self.cond(s.cond, scope)
            self.loop_body(s.body, _Scope(scope))
        elif isinstance(s, A.For):
            inner = _Scope(scope)
            if s.init is not None:
                self.stmt(s.init, inner)
            if s.cond is not None:
                self.cond(s.cond, inner)
            self.loop_body(s.body, _Scope(inner))
            if s.step is not None:
                self.stmt(s.step, inner)
            s.induction, s.monotone = monotone_induction(s)
        elif isinstance(s, A.ForEach):
            aty = self.expr(s.array, scope)
            if not aty.array:
                self.err("for-each requires an array", s.array)
            if not assignable(s.elem, A.Type(aty.base)):
                self.err(f"cannot bind {aty.base} element to {s.elem}", s)
            inner = _Scope(scope)
            s.sym = self.declare(inner, s.name, s.elem, s)
            self.loop_body(s.body, _Scope(inner))
        elif isinstance(s, A.Return):
            rt = self.fn.return_type
            if s.value is None:
                if rt != A.VOID:
                    self.err(f"'{self.fn.name}' must return {rt}", s)
            else:
                ty = self.expr(s.value, scope)
                if rt == A.VOID or not assignable(rt, ty):
                    self.err(f"cannot return {ty} from '{self.fn.name}'", s)
        elif isinstance(s, (A.Break, A.Continue)):
            if self.loop_depth == 0:
                self.err("break/continue outside loop", s)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr, scope)
        else:  # pragma: no cover
            raise TypeError(s)

    def loop_body(self, body, scope):
        self.loop_depth += 1
        self.block(body, scope)
        self.loop_depth -= 1

    def cond(self, e, scope):
        if self.expr(e, scope) != A.BOOL:
            self.err("condition must be bool", e)

    # -- expressions ---------------------------------------------------------

    def expr(self, e, scope) -> A.Type:
        e.ty = ty = self._expr(e, scope)
        return ty

    def _expr(self, e, scope) -> A.Type:
        if isinstance(e, A.IntLit):
            return A.INT
        if isinstance(e, A.FloatLit):
            return A.FLOAT
        if isinstance(e, A.BoolLit):
            return A.BOOL
        if isinstance(e, A.Var):
            e.sym = self.lookup(scope, e.name, e)
            return e.sym.type
        if isinstance(e, A.Index):
            self.expr(e.array, scope)
            if not e.array.sym.type.array:
                self.err(f"'{e.array.name}' is not an array", e)
            if self.expr(e.index, scope) != A.INT:
                self.err("array index must be int", e.index)
            return A.Type(e.array.sym.type.base)
        if isinstance(e, A.NewArray):
            if e.elem.base == "void":
                self.err("cannot allocate void array", e)
            if self.expr(e.size, scope) != A.INT:
                self.err("array size must be int", e.size)
            return A.Type(e.elem.base, True)
        if isinstance(e, A.UnaryOp):
            ty = self.expr(e.operand, scope)
            if e.op == "!":
                if ty != A.BOOL:
                    self.err("'!' requires bool", e)
                return A.BOOL
            if ty.base not in NUMERIC or ty.array:
                self.err("unary '-' requires a number", e)
            return ty
        if isinstance(e, A.BinOp):
            lt = self.expr(e.left, scope)
            rt = self.expr(e.right, scope)
            op = e.op
            if op in ("&&", "||"):
                if lt != A.BOOL or rt != A.BOOL:
                    self.err(f"'{op}' requires bool operands", e)
                return A.BOOL
            if op in ("==", "!="):
                if lt.array or rt.array:
                    self.err(f"cannot compare arrays with '{op}'", e)
                if (lt == A.BOOL) != (rt == A.BOOL):
                    self.err(f"type mismatch: {lt} {op} {rt}", e)
                return A.BOOL
            if not (lt.scalar and rt.scalar and lt.base in NUMERIC and rt.base in NUMERIC):
                self.err(f"type mismatch: {lt} {op} {rt}", e)
            if op in ("<", "<=", ">", ">="):
                return A.BOOL
            if op == "%" and (lt != A.INT or rt != A.INT):
                self.err("'%' requires int operands", e)
            return A.FLOAT if A.FLOAT in (lt, rt) else A.INT
        if isinstance(e, A.Call):
            return self.call(e, scope)
        raise TypeError(e)  # pragma: no cover

    def call(self, e: A.Call, scope) -> A.Type:
        argtys = [self.expr(a, scope) for a in e.args]
        fn = self.functions.get(e.name)
        if fn is not None:
            e.target = "user"
            if len(argtys) != len(fn.params):
                self.err(f"'{e.name}' expects {len(fn.params)} arguments, got {len(argtys)}", e)
            for p, ty, arg in zip(fn.params, argtys, e.args):
                if not assignable(p.type, ty):
                    self.err(f"argument '{p.name}' of '{e.name}' expects {p.type}, got {ty}", arg)
            return fn.return_type
        if e.name not in BUILTINS:
            self.err(f"undefined function '{e.name}'", e)
        e.target = "builtin"
        params, ret = BUILTINS[e.name]
        if params is None:
            for ty, arg in zip(argtys, e.args):
                if ty.array:
                    self.err("cannot print an array", arg)
            return ret
        if len(params) != len(argtys):
            self.err(f"'{e.name}' expects {len(params)} arguments, got {len(argtys)}", e)
        for p, ty, arg in zip(params, argtys, e.args):
            if p == "num":
                if not ty.scalar or ty.base not in NUMERIC:
                    self.err(f"'{e.name}' expects a number", arg)
            elif p == "array":
                if not ty.array:
                    self.err(f"'{e.name}' expects an array", arg)
            elif not assignable(p, ty):
                self.err(f"'{e.name}' expects {p}, got {ty}", arg)
        if ret == "num":
            return A.FLOAT if A.FLOAT in argtys else A.INT
        return ret


def _assigned_syms(node) -> set:
    out = set()
    for n in node.walk():
        if isinstance(n, (A.Assign, A.VarDecl)) and n.sym is not None:
            out.add(n.sym)
    return out


def monotone_induction(loop: A.For):
    """Return (induction symbol, flag) for a for-loop.

    The flag holds iff the step is ``i = i + c`` or ``i = i - c`` where ``c``
    is a literal or a variable not written inside the loop, and the body
    never writes ``i``.
    """
    step = loop.step
    if not isinstance(step, A.Assign):
        return None, False
    sym = step.sym
    v = step.value
    if not (isinstance(v, A.BinOp) and v.op in ("+", "-")):
        return sym, False
    if not (isinstance(v.left, A.Var) and v.left.sym is sym):
        return sym, False
    body_writes = _assigned_syms(loop.body)
    c = v.right
    if isinstance(c, A.IntLit):
        ok = True
    elif isinstance(c, A.Var):
        ok = c.sym is not sym and c.sym not in body_writes
    else:
        ok = False
    return sym, ok and sym not in body_writes


def parse_program(source: str, filename: str = "<input>") -> A.Program:
    """Parse and resolve a program; raises ParseError or ResolveError."""
    return Resolver(parse(source, filename)).resolve()


def load_program(path) -> A.Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read(), str(path))
