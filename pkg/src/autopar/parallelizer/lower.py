"""Turn an analysed program into a parallel plan."""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field

import networkx as nx

from autopar.analysis.datagroups import Datagroup
from autopar.errors import PlanError
from autopar.frontend import ast as A, count_block
from autopar.parallelizer.granularity import (
    DEFAULT_THRESHOLD, parallelizable_functions, recursive_functions,
)
from autopar.parallelizer.loops import ReductionRegistry, detect_doacross, detect_doall
from autopar.parallelizer.placement import find_future_position
from autopar.parallelizer.plan import (
    ATOMIC, BLOCKING, NONBLOCKING, FunctionPlan, FutureCreate, FutureGet,
    FuturePlacement, Guard, ParallelLoop, ParallelPlan, seq_name,
)


def clone_method(fn: A.FunctionDecl, parallelizable: set):
    """(parallel copy with entry guard, sequential clone calling sequential clones)."""
    par = copy.deepcopy(fn)
    seq = copy.deepcopy(fn)
    seq.name = seq_name(fn.name)
    for node in seq.body.walk():
        if isinstance(node, A.Call) and node.target == "user" and node.name in parallelizable:
            node.name = seq_name(node.name)
    guard = Guard(fn.name, seq.name, list(fn.params), fn.return_type != A.VOID, span=fn.span)
    par.body.stmts.insert(0, guard)
    return par, seq


def candidate_call(stmt, parallelizable):
    """(call, result symbol) when ``stmt`` is a whole-statement invocation."""
    if isinstance(stmt, A.VarDecl) and isinstance(stmt.init, A.Call):
        call, sym = stmt.init, stmt.sym
    elif isinstance(stmt, A.Assign) and isinstance(stmt.value, A.Call):
        call, sym = stmt.value, stmt.sym
    elif isinstance(stmt, A.ExprStmt) and isinstance(stmt.expr, A.Call):
        call, sym = stmt.expr, None
    else:
        return None
    if call.target == "user" and call.name in parallelizable:
        return call, sym
    return None


def _replace_call(stmt, get):
    if isinstance(stmt, A.VarDecl):
        stmt.init = get
    elif isinstance(stmt, A.Assign):
        stmt.value = get
    else:
        stmt.expr = get


@dataclass
class _Frame:
    """A block whose statements are being rewritten."""

    block: A.Block
    original: list
    group: Datagroup
    bare: bool  # a plain nested block (always executes when reached)
    index: int = 0
    inserts: dict = field(default_factory=dict)  # index -> [FutureCreate]
    tasks: dict = field(default_factory=dict)  # stmt nid -> FutureCreate | ParallelLoop
    created_at: dict = field(default_factory=dict)  # FutureCreate -> index


class _FunctionLowerer:
    def __init__(self, lowering, fn: A.FunctionDecl):
        self.lw = lowering
        self.fn = fn
        self.frames = []

    def run(self):
        body = self.fn.body
        guard = body.stmts.pop(0)
        self.block(body, Datagroup.method(self.fn.name), bare=False, in_loop_plan=False)
        body.stmts.insert(0, guard)

    def block(self, block, group, bare, in_loop_plan):
        frame = _Frame(block, list(block.stmts), group, bare)
        self.frames.append(frame)
        rewritten = []
        for k, stmt in enumerate(frame.original):
            frame.index = k
            rewritten.append(self.stmt(stmt, frame, in_loop_plan))
        self.frames.pop()
        out = []
        for k, stmt in enumerate(rewritten):
            out.extend(frame.inserts.get(k, ()))
            out.append(stmt)
        block.stmts = out

    def stmt(self, stmt, frame, in_loop_plan):
        cand = candidate_call(stmt, self.lw.parallelizable)
        if cand is not None:
            return self.place(stmt, cand, frame)
        if isinstance(stmt, A.Block):
            self.block(stmt, Datagroup.block(self.fn.name, stmt.nid), True, in_loop_plan)
        elif isinstance(stmt, A.If):
            self.nested(stmt.then, in_loop_plan)
            if stmt.orelse is not None:
                self.nested(stmt.orelse, in_loop_plan)
        elif isinstance(stmt, A.While):
            self.nested(stmt.body, in_loop_plan)
        elif isinstance(stmt, (A.For, A.ForEach)):
            return self.loop(stmt, frame, in_loop_plan)
        return stmt

    def nested(self, block, in_loop_plan):
        self.block(block, Datagroup.block(self.fn.name, block.nid), False, in_loop_plan)

    def loop(self, stmt, frame, in_loop_plan):
        lw = self.lw
        plan = detect_doall(stmt, lw.table) or detect_doacross(stmt, lw.table, lw.registry)
        if plan is not None and in_loop_plan and count_block(stmt.body) < lw.threshold:
            plan = None  # already inside a parallel slice and too small to split again
        self.nested(stmt.body, in_loop_plan or plan is not None)
        if plan is None:
            return stmt
        plan.function = self.fn.name
        lw.loops.append(plan)
        node = ParallelLoop(plan, nid=stmt.nid, span=stmt.span)
        frame.tasks[stmt.nid] = node
        return node

    def place(self, stmt, cand, frame):
        call, sym = cand
        lw = self.lw
        table = lw.table
        res = find_future_position(_View(frame.original), frame.index, call, table,
                                   self.fn.name, frame.group, frame.tasks)
        soft = list(res.soft_deps)
        ins = self._insertion(frame, res.hard_index, soft)
        target, target_index = frame, ins
        # retry one block outward while the creation would open its block
        depth = len(self.frames) - 1
        while target_index == 0 and target.bare and depth > 0 \
                and not any(t in target.created_at or t in target.tasks.values() for t in soft):
            outer = self.frames[depth - 1]
            ores = find_future_position(_View(outer.original), outer.index, call, table,
                                        self.fn.name, outer.group, outer.tasks)
            extra = [t for t in ores.soft_deps if t not in soft]
            soft = soft + extra
            target, target_index = outer, self._insertion(outer, ores.hard_index, soft)
            depth -= 1
            res = ores
        fid = next(lw.fids)
        slot = self.fn.nslots
        self.fn.nslots += 1
        futures = [t for t in soft if isinstance(t, FutureCreate)]
        create = FutureCreate(
            fid, call, slot, futures, sym,
            kind=lw.task_kind(call.name), atomic_groups=lw.table.atomic.get(call.name, ()),
            recursive=lw.is_recursive(self.fn.name, call.name), span=call.span,
        )
        create.placement = FuturePlacement(
            fid, self.fn.name, call.nid,
            res.hard_dep.nid if res.hard_dep is not None else None,
            frozenset(t.fid for t in futures), target.block.nid, target_index,
            frame.block.nid, frame.index,
        )
        lw.placements.append(create.placement)
        target.inserts.setdefault(target_index, []).append(create)
        target.created_at[create] = target_index
        frame.tasks[stmt.nid] = create
        _replace_call(stmt, FutureGet(create, span=call.span, ty=call.ty))
        return stmt

    @staticmethod
    def _insertion(frame, hard_index, soft):
        ins = hard_index + 1
        for t in soft:
            if t in frame.created_at:
                ins = max(ins, frame.created_at[t])
            elif isinstance(t, ParallelLoop):
                for nid, task in frame.tasks.items():
                    if task is t:
                        ins = max(ins, _index_of(frame.original, nid) + 1)
        return ins


def _index_of(stmts, nid):
    for i, s in enumerate(stmts):
        if s.nid == nid:
            return i
    return -1


class _View:
    """Read-only block stand-in over a statement list."""

    def __init__(self, stmts):
        self.stmts = stmts


class _Lowering:
    def __init__(self, program, table, threshold):
        self.program = program
        self.table = table
        self.threshold = threshold
        self.parallelizable = parallelizable_functions(program, table, threshold)
        self.recursive = recursive_functions(table.callgraph)
        self.registry = ReductionRegistry.for_program(program)
        self.fids = itertools.count(0)
        self.placements = []
        self.loops = []
        self.scc = {}
        for comp in nx.strongly_connected_components(table.callgraph):
            for f in comp:
                self.scc[f] = frozenset(comp)

    def task_kind(self, callee):
        if callee in self.table.blocking:
            return BLOCKING
        if self.table.atomic.get(callee):
            return ATOMIC
        return NONBLOCKING

    def is_recursive(self, caller, callee):
        return callee in self.recursive and self.scc.get(caller) == self.scc.get(callee)

    def run(self) -> ParallelPlan:
        functions = {}
        for fn in self.program.functions:
            if fn.name in self.parallelizable:
                par, seq = clone_method(fn, self.parallelizable)
                _FunctionLowerer(self, par).run()
                functions[fn.name] = FunctionPlan(fn.name, par, seq)
            else:
                functions[fn.name] = FunctionPlan(fn.name, copy.deepcopy(fn))
        plan = ParallelPlan(self.program, self.table, functions, self.placements,
                            self.loops, self.parallelizable, self.threshold)
        verify_plan(plan)
        return plan


def verify_plan(plan: ParallelPlan):
    """Every future get must follow its creation in execution order."""
    for fp in plan.functions.values():
        seen = set()
        for node in fp.parallel.walk():
            if isinstance(node, FutureCreate):
                seen.add(node.fid)
            elif isinstance(node, FutureGet) and node.create.fid not in seen:
                raise PlanError(
                    f"future {node.create.var} read before it is created in '{fp.name}'",
                    node.span,
                )


def lower(program: A.Program, table, threshold: int = DEFAULT_THRESHOLD) -> ParallelPlan:
    return _Lowering(program, table, threshold).run()
