"""DO-ALL and DO-ACROSS detection over the signature model."""

from __future__ import annotations

import math

from autopar.analysis.datagroups import ARRAY, GLOBAL, INDEXED, LOCAL, READ, WRITE
from autopar.frontend import ast as A
from autopar.parallelizer.plan import DOACROSS, DOALL, LoopPlan, Reduction

COMPARISONS = ("<", "<=", ">", ">=")


class ReductionRegistry:
    """Commutative/associative update operators usable by DO-ACROSS loops."""

    def __init__(self):
        # op -> (operator merging partial results, identity for a given type)
        self.ops = {
            "+": ("+", lambda ty: 0.0 if ty == A.FLOAT else 0),
            "-": ("+", lambda ty: 0.0 if ty == A.FLOAT else 0),
            "*": ("*", lambda ty: 1.0 if ty == A.FLOAT else 1),
            "min": ("min", lambda ty: math.inf),
            "max": ("max", lambda ty: -math.inf),
        }

    def register(self, name, identity):
        self.ops[name] = (name, lambda ty, v=identity: v)

    def __contains__(self, op):
        return op in self.ops

    @classmethod
    def for_program(cls, program: A.Program) -> "ReductionRegistry":
        reg = cls()
        for red in program.reductions:
            reg.register(red.op, red.identity.value)
        return reg


def _iter_nodes(node, skip_nested_loops=False):
    for child in node.children():
        yield child
        if skip_nested_loops and isinstance(child, A.LOOP_TYPES):
            continue
        yield from _iter_nodes(child, skip_nested_loops)


def _declared_uids(body) -> set:
    out = set()
    for n in body.walk():
        if isinstance(n, (A.VarDecl, A.ForEach)) and n.sym is not None:
            out.add(n.sym.uid)
    return out


def _assigned_syms(body) -> set:
    return {n.sym for n in body.walk() if isinstance(n, (A.Assign, A.VarDecl, A.ForEach))}


def _vars_read(expr) -> set:
    return {n.sym for n in expr.walk() if isinstance(n, A.Var)}


def _has_call(expr) -> bool:
    return any(isinstance(n, A.Call) for n in expr.walk())


def _escapes(body) -> bool:
    """A return anywhere, or a break aimed at this loop."""
    if any(isinstance(n, A.Return) for n in body.walk()):
        return True
    return any(isinstance(n, A.Break) for n in _iter_nodes(body, skip_nested_loops=True))


def _range_ok(loop) -> bool:
    written = _assigned_syms(loop.body)
    if isinstance(loop, A.ForEach):
        return isinstance(loop.array, A.Var) and loop.array.sym not in written
    if not (loop.monotone and loop.induction is not None):
        return False
    ind = loop.induction
    if ind.type != A.INT:
        return False
    if not (isinstance(loop.init, A.VarDecl) and loop.init.sym is ind and loop.init.init is not None):
        return False
    cond = loop.cond
    if not (isinstance(cond, A.BinOp) and cond.op in COMPARISONS):
        return False
    if isinstance(cond.left, A.Var) and cond.left.sym is ind:
        bound = cond.right
    elif isinstance(cond.right, A.Var) and cond.right.sym is ind:
        bound = cond.left
    else:
        return False
    if ind in _vars_read(bound) or _has_call(bound):
        return False
    return not (_vars_read(bound) & written)


def _classify_writes(loop, table):
    """Split body writes into (outer scalars, arrays ok, conflict flag)."""
    body = loop.body
    sig = table.sigs[body.nid]
    local_uids = _declared_uids(body)
    ind_uid = loop.induction.uid if isinstance(loop, A.For) else None
    outer = set()
    arrays = {}
    for p in sig:
        g = p.group
        if g.kind in (ARRAY, INDEXED):
            arrays.setdefault(g.name, []).append(p)
    written_arrays = {name for name, perms in arrays.items() if any(p.kind == WRITE for p in perms)}
    for p in sig:
        if p.kind != WRITE:
            continue
        g = p.group
        if g.kind == GLOBAL:
            return None
        if g.kind == LOCAL:
            if g.name in local_uids or g.name.startswith("return@"):
                continue
            outer.add(g.name)
    for name in written_arrays:
        keys = set()
        for p in arrays[name]:
            if p.group.kind != INDEXED or ind_uid is None or p.group.index[0] != ind_uid:
                return None
            keys.add(p.group.index)
        if len(keys) != 1:
            return None
    return outer


def detect_doall(loop, table):
    """DO-ALL plan if no two iterations can conflict, else None."""
    if not _range_ok(loop) or _escapes(loop.body):
        return None
    outer = _classify_writes(loop, table)
    if outer is None or outer:
        return None
    return LoopPlan(DOALL, loop, getattr(loop, "induction", None))


def _update_op(value, sym, registry):
    """Operator of ``acc = acc (op) e`` style updates, or None."""
    def is_acc(e):
        return isinstance(e, A.Var) and e.sym is sym

    def free_of_acc(e):
        return sym not in _vars_read(e)

    if isinstance(value, A.BinOp) and value.op in ("+", "-", "*"):
        if is_acc(value.left) and free_of_acc(value.right):
            return value.op
        if value.op != "-" and is_acc(value.right) and free_of_acc(value.left):
            return value.op
        return None
    if isinstance(value, A.Call) and len(value.args) == 2 and value.name in registry:
        a, b = value.args
        if is_acc(a) and free_of_acc(b):
            return value.name
        if value.target == "builtin" and is_acc(b) and free_of_acc(a):
            return value.name
    return None


def detect_doacross(loop, table, registry: ReductionRegistry):
    """DO-ACROSS plan if every cross-iteration write is a reduction update."""
    if not _range_ok(loop) or _escapes(loop.body):
        return None
    outer = _classify_writes(loop, table)
    if not outer:
        return None
    syms = {}
    for n in loop.body.walk():
        if isinstance(n, A.Assign) and n.sym.uid in outer:
            syms[n.sym.uid] = n.sym
    if set(syms) != outer:
        return None
    header = [e for e in (getattr(loop, "cond", None), getattr(loop, "step", None)) if e is not None]
    reductions = []
    for uid, sym in sorted(syms.items()):
        if not sym.type.scalar:
            return None
        if any(sym in _vars_read(h) for h in header):
            return None
        updates = [n for n in loop.body.walk() if isinstance(n, A.Assign) and n.sym is sym]
        uses = [n for n in loop.body.walk() if isinstance(n, A.Var) and n.sym is sym]
        if len(uses) != len(updates):
            return None
        ops = set()
        for u in updates:
            op = _update_op(u.value, sym, registry)
            if op is None:
                return None
            ops.add(op)
        combines = {registry.ops[op][0] for op in ops}
        if len(combines) != 1:
            return None
        op = sorted(ops)[0] if ops != {"+", "-"} else "+"
        combine, identity = registry.ops[op]
        reductions.append(Reduction(sym, op, identity(sym.type), combine))
    return LoopPlan(DOACROSS, loop, getattr(loop, "induction", None), reductions)
