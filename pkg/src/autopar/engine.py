"""Closure compiler for programs and parallel plans.

Every function becomes a Python callable working on a list frame (slot 0
holds the return value). Statements compile to ``run(frame)`` closures that
return ``None`` or one of the RET/BRK/CNT signals; expressions compile to
``ev(frame)`` closures. Plan nodes compile against a :class:`Runtime`.
"""

from __future__ import annotations

import math
import operator
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from autopar import builtins as B
from autopar.errors import MplRuntimeError
from autopar.frontend import ast as A
from autopar.parallelizer.plan import (
    DOALL, FutureCreate, FutureGet, Guard, ParallelLoop, ParallelPlan,
)
from autopar.runtime.task import RECURSIVE
from autopar.stack import call_with_big_stack

RET, BRK, CNT = "ret", "brk", "cnt"

_DEFAULTS = {"int": 0, "float": 0.0, "bool": False}
_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}
_COMPARE = {
    "<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "==": operator.eq, "!=": operator.ne,
}
_COMBINE = {"+": operator.add, "*": operator.mul, "min": min, "max": max}


def _needs_float(target: A.Type, expr) -> bool:
    return target == A.FLOAT and getattr(expr, "ty", None) != A.FLOAT


def _to_float(ev):
    return lambda f: float(ev(f))


def trip_count(start, bound, op, step, cond):
    """Iterations of ``for (i = start; i op bound; i += step)``, or None if unbounded."""
    if not cond(start):
        return 0
    rising = op in ("<", "<=")
    if step == 0 or (step > 0) != rising:
        return None
    span = (bound - start) / step
    n = max(0, math.floor(span) + 1 if op in ("<=", ">=") else math.ceil(span))
    # float bounds: settle the estimate against the condition itself
    while n > 0 and not cond(start + (n - 1) * step):
        n -= 1
    while cond(start + n * step):
        n += 1
    return n


class Compiler:
    def __init__(self, functions, runtime=None, output=None, reductions=()):
        self.decls = functions  # name -> FunctionDecl
        self.rt = runtime
        self.output = [] if output is None else output
        self.cells = {name: [None] for name in functions}
        self.reductions = {r.op for r in reductions}
        self.fn = None

    def compile(self) -> dict:
        for name, decl in self.decls.items():
            self.cells[name][0] = self.function(decl)
        return {name: cell[0] for name, cell in self.cells.items()}

    # functions

    def function(self, fn: A.FunctionDecl):
        self.fn = fn
        body = self.block(fn.body)
        nslots = fn.nslots
        slots = [p.sym.slot for p in fn.params]
        arrays = [i for i, p in enumerate(fn.params) if p.type.array]
        name = fn.name
        contiguous = slots == list(range(1, len(slots) + 1))
        tail = [None] * (nslots - 1 - len(slots))

        def check_aliases(args):
            seen = set()
            for i in arrays:
                if id(args[i]) in seen:
                    raise MplRuntimeError(f"array arguments of '{name}' alias each other")
                seen.add(id(args[i]))

        if contiguous and len(arrays) < 2:
            def call(*args):
                frame = [None, *args, *tail]
                body(frame)
                return frame[0]
        else:
            def call(*args):
                if len(arrays) > 1:
                    check_aliases(args)
                frame = [None] * nslots
                for s, a in zip(slots, args):
                    frame[s] = a
                body(frame)
                return frame[0]
        call.__name__ = name
        return call

    # statements

    def block(self, block: A.Block):
        stmts = tuple(self.stmt(s) for s in block.stmts)
        if len(stmts) == 1:
            return stmts[0]

        def run(f):
            for s in stmts:
                sig = s(f)
                if sig is not None:
                    return sig
            return None
        return run

    def stmt(self, s):
        method = getattr(self, "stmt_" + type(s).__name__)
        return method(s)

    def stmt_Block(self, s):
        return self.block(s)

    def stmt_VarDecl(self, s):
        slot = s.sym.slot
        if s.init is None:
            if s.type.array:
                def run(f):
                    f[slot] = []
            else:
                value = _DEFAULTS[s.type.base]

                def run(f):
                    f[slot] = value
            return run
        ev = self.value(s.init, s.type)

        def run(f):
            f[slot] = ev(f)
        return run

    def stmt_Assign(self, s):
        slot = s.sym.slot
        ev = self.value(s.value, s.sym.type)

        def run(f):
            f[slot] = ev(f)
        return run

    def stmt_ArrayStore(self, s):
        slot = s.sym.slot
        index = self.expr(s.index)
        value = self.value(s.value, A.Type(s.sym.type.base))
        span = s.span

        def run(f):
            arr = f[slot]
            i = index(f)
            v = value(f)
            if not 0 <= i < len(arr):
                raise MplRuntimeError(f"index {i} out of bounds for length {len(arr)}", span)
            arr[i] = v
        return run

    def stmt_ExprStmt(self, s):
        ev = self.expr(s.expr)

        def run(f):
            ev(f)
        return run

    def stmt_If(self, s):
        cond = self.expr(s.cond)
        then = self.block(s.then)
        if s.orelse is None:
            def run(f):
                if cond(f):
                    return then(f)
            return run
        orelse = self.block(s.orelse)

        def run(f):
            if cond(f):
                return then(f)
            return orelse(f)
        return run

    def stmt_While(self, s):
        cond = self.expr(s.cond)
        body = self.block(s.body)

        def run(f):
            while cond(f):
                sig = body(f)
                if sig is not None:
                    if sig is BRK:
                        break
                    if sig is RET:
                        return RET
        return run

    def stmt_For(self, s):
        init = self.stmt(s.init) if s.init is not None else (lambda f: None)
        cond = self.expr(s.cond) if s.cond is not None else (lambda f: True)
        step = self.stmt(s.step) if s.step is not None else (lambda f: None)
        body = self.block(s.body)

        def run(f):
            init(f)
            while cond(f):
                sig = body(f)
                if sig is not None:
                    if sig is BRK:
                        break
                    if sig is RET:
                        return RET
                step(f)
        return run

    def stmt_ForEach(self, s):
        arr = self.expr(s.array)
        slot = s.sym.slot
        body = self.block(s.body)
        widen = s.elem == A.FLOAT

        def run(f):
            for item in list(arr(f)):
                f[slot] = float(item) if widen else item
                sig = body(f)
                if sig is not None:
                    if sig is BRK:
                        break
                    if sig is RET:
                        return RET
        return run

    def stmt_Return(self, s):
        if s.value is None:
            return lambda f: RET
        ev = self.value(s.value, self.fn.return_type)

        def run(f):
            f[0] = ev(f)
            return RET
        return run

    def stmt_Break(self, s):
        return lambda f: BRK

    def stmt_Continue(self, s):
        return lambda f: CNT

    # plan statements

    def stmt_Guard(self, s: Guard):
        rt = self.rt
        cell = self.cells[s.seq_name]
        slots = [p.sym.slot for p in s.params]

        def run(f):
            if rt.should_seq():
                f[0] = cell[0](*[f[i] for i in slots])
                return RET
        return run

    def stmt_FutureCreate(self, s: FutureCreate):
        rt = self.rt
        call = self.expr(s.call)
        slot = s.slot
        dep_slots = [d.slot for d in s.soft_deps]
        # earlier futures whose results this call reads through their variables
        inject = []
        for d in s.soft_deps:
            if d.result_sym is not None:
                inject.append((d.slot, d.result_sym.slot, d.result_sym.type == A.FLOAT))
        hints = (RECURSIVE,) if s.recursive else ()
        label = f"{s.var} = {s.call.name}(...) at {s.span}"
        kind, groups = s.kind, tuple(s.atomic_groups)

        def run(f):
            snapshot = f[:]

            def body():
                try:
                    for fslot, vslot, flt in inject:
                        v = snapshot[fslot].get()
                        snapshot[vslot] = float(v) if flt else v
                    return call(snapshot)
                except MplRuntimeError as exc:
                    if exc.provenance is None:
                        exc.provenance = label
                    raise
            f[slot] = rt.spawn(body, [f[d] for d in dep_slots], kind, groups, hints)
        return run

    def stmt_ParallelLoop(self, s: ParallelLoop):
        plan = s.plan
        loop = plan.loop
        rt = self.rt
        body = self.block(loop.body)
        sequential = self.stmt(loop)
        reductions = [
            (r.sym.slot, r.identity, self.combiner(r.combine), r.sym.type == A.FLOAT)
            for r in plan.reductions
        ]
        doall = plan.kind == DOALL

        if isinstance(loop, A.ForEach):
            arr_ev = self.expr(loop.array)
            eslot = loop.sym.slot
            widen = loop.elem == A.FLOAT

            def bounds(f):
                items = list(arr_ev(f))

                def set_index(state, k):
                    state[eslot] = float(items[k]) if widen else items[k]
                return len(items), set_index
        else:
            ind = loop.induction
            islot = ind.slot
            start_ev = self.expr(loop.init.init)
            step_val = loop.step.value
            step_ev = self.expr(step_val.right)
            sign = 1 if step_val.op == "+" else -1
            cond = loop.cond
            if isinstance(cond.left, A.Var) and cond.left.sym is ind:
                op, bound_ev = cond.op, self.expr(cond.right)
            else:
                op, bound_ev = _FLIP[cond.op], self.expr(cond.left)
            test = _COMPARE[op]

            def bounds(f):
                start = start_ev(f)
                step = sign * step_ev(f)
                bound = bound_ev(f)
                n = trip_count(start, bound, op, step, lambda i: test(i, bound))
                if n is None:
                    return None, None

                def set_index(state, k):
                    state[islot] = start + k * step
                return n, set_index

        def run(f):
            n, set_index = bounds(f)
            if n is None:
                return sequential(f)

            def one(state, k):
                set_index(state, k)
                body(state)

            if doall:
                rt.parallel_for(0, n, one, local=lambda: f[:]).get()
                return None

            def local():
                state = f[:]
                for slot, ident, _, _ in reductions:
                    state[slot] = ident
                return state

            partial = rt.map_reduce(
                0, n, one, [(comb, ident) for _, ident, comb, _ in reductions],
                local=local, extract=lambda st: tuple(st[r[0]] for r in reductions),
            ).get()
            for (slot, _, comb, flt), v in zip(reductions, partial):
                merged = comb(f[slot], v)
                f[slot] = float(merged) if flt else merged
        return run

    def combiner(self, op):
        if op in _COMBINE:
            return _COMBINE[op]
        cell = self.cells[op]
        return lambda a, b: cell[0](a, b)

    # expressions

    def value(self, e, target: A.Type):
        ev = self.expr(e)
        return _to_float(ev) if _needs_float(target, e) else ev

    def expr(self, e):
        return getattr(self, "expr_" + type(e).__name__)(e)

    def expr_IntLit(self, e):
        v = e.value
        return lambda f: v

    expr_FloatLit = expr_BoolLit = expr_IntLit

    def expr_Var(self, e):
        slot = e.sym.slot
        return lambda f: f[slot]

    def expr_Index(self, e):
        slot = e.array.sym.slot
        index = self.expr(e.index)
        span = e.span

        def ev(f):
            arr = f[slot]
            i = index(f)
            if not 0 <= i < len(arr):
                raise MplRuntimeError(f"index {i} out of bounds for length {len(arr)}", span)
            return arr[i]
        return ev

    def expr_UnaryOp(self, e):
        inner = self.expr(e.operand)
        if e.op == "!":
            return lambda f: not inner(f)
        return lambda f: -inner(f)

    def expr_NewArray(self, e):
        size = self.expr(e.size)
        fill = _DEFAULTS[e.elem.base]
        span = e.span

        def ev(f):
            n = size(f)
            if n < 0:
                raise MplRuntimeError(f"negative array size {n}", span)
            return [fill] * n
        return ev

    def expr_BinOp(self, e):
        op = e.op
        l, r = self.expr(e.left), self.expr(e.right)
        if op == "&&":
            return lambda f: bool(l(f)) and bool(r(f))
        if op == "||":
            return lambda f: bool(l(f)) or bool(r(f))
        if op == "+":
            return lambda f: l(f) + r(f)
        if op == "-":
            return lambda f: l(f) - r(f)
        if op == "*":
            return lambda f: l(f) * r(f)
        if op in ("/", "%"):
            span = e.span
            fn = B.int_mod if op == "%" else (B.int_div if e.ty == A.INT else B.float_div)

            def ev(f):
                a = l(f)
                b = r(f)
                if b == 0:
                    raise MplRuntimeError("division by zero", span)
                return fn(a, b)
            return ev
        cmp = _COMPARE[op]
        return lambda f: cmp(l(f), r(f))

    def expr_FutureGet(self, e: FutureGet):
        slot = e.create.slot
        return lambda f: f[slot].get()

    def expr_Call(self, e: A.Call):
        if e.target == "user":
            return self.user_call(e)
        args = [self.expr(a) for a in e.args]
        if e.name == "print":
            out = self.output
            fmt = B.format_value

            def ev(f):
                out.append(" ".join(fmt(a(f)) for a in args))
            return ev
        impl = B.PURE[e.name]
        span = e.span
        to_float = e.ty == A.FLOAT

        def ev(f):
            try:
                result = impl(*[a(f) for a in args])
            except MplRuntimeError as exc:
                raise MplRuntimeError(exc.message, span) from None
            return float(result) if to_float else result
        return ev

    def user_call(self, e):
        decl = self.decls.get(e.name)
        params = decl.params if decl is not None else []
        args = [
            self.value(a, p.type) if p is not None else self.expr(a)
            for a, p in zip(e.args, params + [None] * (len(e.args) - len(params)))
        ]
        cell = self.cells[e.name]
        if len(args) == 0:
            return lambda f: cell[0]()
        if len(args) == 1:
            a0, = args
            return lambda f: cell[0](a0(f))
        if len(args) == 2:
            a0, a1 = args
            return lambda f: cell[0](a0(f), a1(f))
        if len(args) == 3:
            a0, a1, a2 = args
            return lambda f: cell[0](a0(f), a1(f), a2(f))
        return lambda f: cell[0](*[a(f) for a in args])


@dataclass
class RunResult:
    value: object
    output: list = field(default_factory=list)
    stats: object = None
    seconds: float = 0.0


def _entry_args(fn: A.FunctionDecl, args):
    if len(args) != len(fn.params):
        raise MplRuntimeError(f"'{fn.name}' expects {len(fn.params)} arguments, got {len(args)}")
    return [float(a) if p.type == A.FLOAT else a for p, a in zip(fn.params, args)]


def compile_program(program: A.Program, output=None) -> dict:
    return Compiler(program.by_name, None, output, program.reductions).compile()


def compile_plan(plan: ParallelPlan, runtime, output=None) -> dict:
    decls = {}
    for fp in plan.functions.values():
        decls[fp.name] = fp.parallel
        if fp.cloned:
            decls[fp.sequential.name] = fp.sequential
    return Compiler(decls, runtime, output, plan.program.reductions).compile()


@contextmanager
def keep_output(output):
    """Attach the lines printed so far to a fault escaping the block."""
    try:
        yield
    except MplRuntimeError as exc:
        if exc.output is None:
            exc.output = list(output)
        raise


def run_compiled(program: A.Program, args=()) -> RunResult:
    """Sequential run of the original program through the compiler."""
    output = []
    fns = compile_program(program, output)
    entry = program.function(program.entry)
    values = _entry_args(entry, list(args))
    t0 = time.perf_counter()
    with keep_output(output):
        value = call_with_big_stack(fns[entry.name], *values)
    return RunResult(value, output, None, time.perf_counter() - t0)


def run_plan(plan: ParallelPlan, args=(), runtime=None, **runtime_options) -> RunResult:
    """Execute ``plan`` on ``runtime`` (a fresh one from ``runtime_options`` if omitted)."""
    from autopar.runtime import Runtime

    own = runtime is None
    rt = Runtime(**runtime_options) if own else runtime
    output = []
    fns = compile_plan(plan, rt, output)
    entry = plan.program.function(plan.program.entry)
    values = _entry_args(entry, list(args))
    try:
        rt.start()
        t0 = time.perf_counter()
        with keep_output(output):
            value = rt.run(fns[entry.name], *values)
        seconds = time.perf_counter() - t0
    finally:
        if own:
            rt.shutdown()
    return RunResult(value, output, rt.stats(), seconds)


__all__ = ["Compiler", "RunResult", "compile_plan", "compile_program", "run_compiled",
           "run_plan", "trip_count"]
