"""Reference tree-walking interpreter.

This is the sequential oracle: it executes the resolved source program
directly and is deliberately independent of the compiled engine that runs
parallel plans. With a :class:`SoundnessChecker` attached it logs every
concrete access and checks it against the static signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from autopar import builtins as B
from autopar.analysis.datagroups import (
    READ, WRITE, CONTROL, Datagroup, Permission,
)
from autopar.analysis.signatures import RETURN
from autopar.errors import MplRuntimeError
from autopar.frontend import ast as A
from autopar.stack import call_with_big_stack


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


def coerce(ty: A.Type, value):
    if ty == A.FLOAT and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


@dataclass
class Activation:
    fn: A.FunctionDecl
    slots: list
    # tracing only: nodes being evaluated, block control groups, array ids
    active: list = field(default_factory=list)
    blocks: list = field(default_factory=list)
    arrays: dict = field(default_factory=dict)
    loop_groups: list = field(default_factory=list)


@dataclass
class Violation:
    function: str
    nid: int
    span: object
    permission: Permission

    def __str__(self):
        return f"{self.span}: {self.permission} not in signature of node {self.nid} ({self.function})"


class SoundnessChecker:
    """Checks each logged access against every enclosing node's signature."""

    def __init__(self, table):
        self.table = table
        self.violations = []
        self.accesses = 0
        self._widened = {}
        self._nodes = {}

    def covered(self, nid, perm) -> bool:
        w = self._widened.get(nid)
        if w is None:
            w = self._widened[nid] = {(p.kind, p.group.widen()) for p in self.table.sigs[nid]}
        return (perm.kind, perm.group) in w

    def check(self, act: Activation, perm: Permission):
        self.accesses += 1
        for node in act.active:
            if not self.covered(node.nid, perm):
                self.violations.append(Violation(act.fn.name, node.nid, node.span, perm))


class Interpreter:
    def __init__(self, program: A.Program, checker: SoundnessChecker | None = None, out=None):
        self.program = program
        self.fns = program.by_name
        self.checker = checker
        self.output = [] if out is None else out
        self.chain = []  # activations, innermost last
        self.alias = checker.table.alias if checker else {}

    # -- tracing helpers -----------------------------------------------------

    def log(self, kind, group, act=None):
        if self.checker is not None:
            self.checker.check(act or self.chain[-1], Permission(kind, group))

    def log_local(self, kind, sym):
        if self.checker is not None:
            self.log(kind, Datagroup.local(self.chain[-1].fn.name, sym.uid))

    def log_array(self, kind, arr):
        if self.checker is None:
            return
        key = id(arr)
        for act in self.chain:
            entry = act.arrays.get(key)
            if entry is not None:
                self.log(kind, entry[0], act)

    def bind_array(self, sym, value):
        if self.checker is not None and isinstance(value, list):
            act = self.chain[-1]
            ident = self.alias[act.fn.name].get(sym.uid, sym.uid)
            # keep the list alive so its id cannot be reused while mapped
            act.arrays[id(value)] = (Datagroup.array(act.fn.name, ident), value)

    # -- entry ---------------------------------------------------------------

    def run(self, args=()):
        entry = self.fns[self.program.entry]
        values = [coerce(p.type, a) for p, a in zip(entry.params, args)]
        if len(values) != len(entry.params):
            raise MplRuntimeError(f"'{entry.name}' expects {len(entry.params)} arguments")
        return self.call_function(entry, values)

    def call_function(self, fn: A.FunctionDecl, args):
        seen = set()
        for p, a in zip(fn.params, args):
            if p.type.array:
                if id(a) in seen:
                    raise MplRuntimeError(f"array arguments of '{fn.name}' alias each other")
                seen.add(id(a))
        act = Activation(fn, [None] * fn.nslots)
        self.chain.append(act)
        try:
            for p, a in zip(fn.params, args):
                act.slots[p.sym.slot] = coerce(p.type, a)
                self.bind_array(p.sym, a)
            self.enter(fn.body)
            try:
                self.block(fn.body, Datagroup.method(fn.name))
            except _Return as r:
                return coerce(fn.return_type, r.value)
            finally:
                self.leave()
            return None
        finally:
            self.chain.pop()

    def enter(self, node):
        if self.checker is not None:
            self.chain[-1].active.append(node)

    def leave(self):
        if self.checker is not None:
            self.chain[-1].active.pop()

    # -- statements ----------------------------------------------------------

    def block(self, block, group=None):
        act = self.chain[-1]
        act.blocks.append(group or Datagroup.block(act.fn.name, block.nid))
        try:
            for s in block.stmts:
                self.stmt(s)
        finally:
            act.blocks.pop()

    def stmt(self, s):
        self.enter(s)
        try:
            self._stmt(s)
        finally:
            self.leave()

    def nested_block(self, block):
        self.enter(block)
        try:
            self.block(block)
        finally:
            self.leave()

    def _stmt(self, s):
        slots = self.chain[-1].slots
        if isinstance(s, A.VarDecl):
            if s.init is None:
                value = [] if s.type.array else {"int": 0, "float": 0.0, "bool": False}[s.type.base]
            else:
                value = coerce(s.type, self.expr(s.init))
            slots[s.sym.slot] = value
            self.log_local(WRITE, s.sym)
            self.bind_array(s.sym, value)
        elif isinstance(s, A.Assign):
            value = coerce(s.sym.type, self.expr(s.value))
            slots[s.sym.slot] = value
            self.log_local(WRITE, s.sym)
            self.bind_array(s.sym, value)
        elif isinstance(s, A.ArrayStore):
            arr = slots[s.sym.slot]
            self.log_local(READ, s.sym)
            i = self.expr(s.index)
            value = coerce(A.Type(s.sym.type.base), self.expr(s.value))
            self.check_index(arr, i, s)
            arr[i] = value
            self.log_array(WRITE, arr)
        elif isinstance(s, A.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, A.Block):
            self.block(s)
        elif isinstance(s, A.If):
            self.log_control()
            if self.expr(s.cond):
                self.nested_block(s.then)
            elif s.orelse is not None:
                self.nested_block(s.orelse)
        elif isinstance(s, A.While):
            self.log_control()
            while self.expr(s.cond):
                if self.loop_body(s.body):
                    break
        elif isinstance(s, A.For):
            self.log_control()
            if s.init is not None:
                self.stmt(s.init)
            while s.cond is None or self.expr(s.cond):
                if self.loop_body(s.body):
                    break
                if s.step is not None:
                    self.stmt(s.step)
        elif isinstance(s, A.ForEach):
            self.log_control()
            arr = self.expr(s.array)
            for item in list(arr):
                self.log_array(READ, arr)
                slots[s.sym.slot] = coerce(s.elem, item)
                self.log_local(WRITE, s.sym)
                if self.loop_body(s.body):
                    break
        elif isinstance(s, A.Return):
            value = None if s.value is None else self.expr(s.value)
            if s.value is not None:
                self.log(WRITE, Datagroup.local(self.chain[-1].fn.name, RETURN))
            self.log(CONTROL, Datagroup.method(self.chain[-1].fn.name))
            raise _Return(value)
        elif isinstance(s, A.Break):
            self.log(CONTROL, self.loop_group())
            raise _Break()
        elif isinstance(s, A.Continue):
            self.log(CONTROL, self.loop_group())
            raise _Continue()
        else:  # pragma: no cover
            raise TypeError(s)

    def log_control(self):
        if self.checker is not None:
            self.log(CONTROL, self.chain[-1].blocks[-1])

    def loop_group(self):
        return self.chain[-1].loop_groups[-1]

    def loop_body(self, body) -> bool:
        """Run one iteration; True means the loop was broken out of."""
        act = self.chain[-1]
        act.loop_groups.append(Datagroup.block(act.fn.name, body.nid))
        try:
            self.nested_block(body)
        except _Break:
            return True
        except _Continue:
            return False
        finally:
            act.loop_groups.pop()
        return False

    @staticmethod
    def check_index(arr, i, node):
        if not 0 <= i < len(arr):
            raise MplRuntimeError(f"index {i} out of bounds for length {len(arr)}", node.span)

    # -- expressions ---------------------------------------------------------

    def expr(self, e):
        if self.checker is None:
            return self._expr(e)
        self.enter(e)
        try:
            return self._expr(e)
        finally:
            self.leave()

    def _expr(self, e):
        if isinstance(e, (A.IntLit, A.FloatLit, A.BoolLit)):
            return e.value
        slots = self.chain[-1].slots
        if isinstance(e, A.Var):
            self.log_local(READ, e.sym)
            return slots[e.sym.slot]
        if isinstance(e, A.Index):
            arr = self.expr(e.array)
            i = self.expr(e.index)
            self.check_index(arr, i, e)
            self.log_array(READ, arr)
            return arr[i]
        if isinstance(e, A.BinOp):
            return self.binop(e)
        if isinstance(e, A.UnaryOp):
            v = self.expr(e.operand)
            return (not v) if e.op == "!" else -v
        if isinstance(e, A.NewArray):
            n = self.expr(e.size)
            if n < 0:
                raise MplRuntimeError(f"negative array size {n}", e.span)
            return [{"int": 0, "float": 0.0, "bool": False}[e.elem.base]] * n
        if isinstance(e, A.Call):
            return self.call(e)
        raise TypeError(e)  # pragma: no cover

    def binop(self, e):
        op = e.op
        if op == "&&":
            return bool(self.expr(e.left)) and bool(self.expr(e.right))
        if op == "||":
            return bool(self.expr(e.left)) or bool(self.expr(e.right))
        a = self.expr(e.left)
        b = self.expr(e.right)
        try:
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                return B.int_div(a, b) if e.ty == A.INT else B.float_div(a, b)
            if op == "%":
                return B.int_mod(a, b)
        except MplRuntimeError as exc:
            raise MplRuntimeError(exc.message, e.span) from None
        return {
            "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b,
        }[op]

    def call(self, e: A.Call):
        args = [self.expr(a) for a in e.args]
        caller = self.chain[-1].fn.name
        if e.target == "user":
            fn = self.fns[e.name]
            result = self.call_function(fn, args)
            if fn.return_type != A.VOID:
                self.log(WRITE, Datagroup.local(caller, f"{RETURN}@{e.nid}"))
            return result
        if e.name == "print":
            self.log(WRITE, Datagroup.glob())
            self.output.append(" ".join(B.format_value(a) for a in args))
            return None
        try:
            result = B.PURE[e.name](*args)
        except MplRuntimeError as exc:
            raise MplRuntimeError(exc.message, e.span) from None
        if e.ty == A.FLOAT:
            result = float(result)
        if e.ty != A.VOID:
            self.log(WRITE, Datagroup.local(caller, f"{RETURN}@{e.nid}"))
        return result


@dataclass
class RunResult:
    value: object
    output: list


def run_sequential(program: A.Program, args=(), checker=None) -> RunResult:
    """Execute ``program`` with the reference interpreter."""
    interp = Interpreter(program, checker)
    try:
        value = call_with_big_stack(interp.run, list(args))
    except MplRuntimeError as exc:
        if exc.output is None:
            exc.output = list(interp.output)
        raise
    return RunResult(value, interp.output)
