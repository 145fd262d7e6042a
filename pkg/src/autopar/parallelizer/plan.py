"""Nodes that only occur in parallel plans, and the plan containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from autopar.frontend import ast as A
from autopar.frontend.printer import Printer, format_expr

NONBLOCKING = "nonblocking"
BLOCKING = "blocking"
ATOMIC = "atomic"

DOALL = "doall"
DOACROSS = "doacross"


@dataclass(eq=False)
class FuturePlacement:
    fid: int
    function: str
    node: int  # nid of the invocation
    hard_dep: Optional[int]  # nid of the hard-dependency statement
    soft_deps: frozenset  # fids of earlier futures this one waits on
    block: int  # nid of the block receiving the creation
    insertion_point: int  # index in that block's original statement list
    site_block: int = 0  # nid of the block holding the get
    site_index: int = 0


@dataclass(eq=False)
class FutureCreate(A.Node):
    """Start ``call`` asynchronously and store its future in ``slot``."""

    fid: int
    call: A.Call
    slot: int
    soft_deps: list  # FutureCreate nodes
    result_sym: Optional[A.Symbol]  # variable the get site writes, if any
    kind: str = NONBLOCKING
    atomic_groups: tuple = ()
    recursive: bool = False
    placement: FuturePlacement = field(default=None, repr=False)
    nid: int = None
    span: A.SourceSpan = None

    # identity semantics: each creation is a distinct task
    __eq__ = object.__eq__
    __hash__ = object.__hash__

    @property
    def var(self):
        return f"_f{self.fid}"

    def children(self):
        yield self.call

    def print_into(self, printer: Printer, depth):
        ty = self.call.ty
        hints = []
        if self.recursive:
            hints.append("recursive")
        if self.kind != NONBLOCKING:
            hints.append(self.kind if not self.atomic_groups
                         else f"atomic({','.join(self.atomic_groups)})")
        hint = f" [{', '.join(hints)}]" if hints else ""
        deps = ""
        if self.soft_deps:
            deps = " after " + ", ".join(d.var for d in self.soft_deps)
        printer.emit(depth, f"future<{ty}> {self.var} = future({format_expr(self.call)}){deps};{hint}")


@dataclass(eq=False)
class FutureGet(A.Node):
    create: FutureCreate
    nid: int = None
    span: A.SourceSpan = None
    ty: A.Type = None

    def children(self):
        return iter(())

    def format(self):
        return f"{self.create.var}.get()"


@dataclass(eq=False)
class Guard(A.Node):
    """Method-entry check that falls back to the sequential clone."""

    function: str
    seq_name: str
    params: list
    returns_value: bool
    nid: int = None
    span: A.SourceSpan = None

    def children(self):
        return iter(())

    def print_into(self, printer, depth):
        args = ", ".join(p.name for p in self.params)
        ret = "return " if self.returns_value else ""
        tail = "" if self.returns_value else " return;"
        printer.emit(depth, f"if (should_seq()) {{ {ret}{self.seq_name}({args});{tail} }}")


@dataclass
class Reduction:
    sym: A.Symbol
    op: str  # + * min max or a user operator name
    identity: object
    combine: str  # operator used to merge private partial results


@dataclass(eq=False)
class LoopPlan:
    kind: str
    loop: A.Node  # the For/ForEach, body already transformed
    induction: Optional[A.Symbol] = None
    reductions: list = field(default_factory=list)
    function: str = ""

    @property
    def nid(self):
        return self.loop.nid


@dataclass(eq=False)
class ParallelLoop(A.Node):
    """A lowered loop; executed by range splitting, joined at this statement."""

    plan: LoopPlan
    nid: int = None
    span: A.SourceSpan = None

    __eq__ = object.__eq__
    __hash__ = object.__hash__

    def children(self):
        yield self.plan.loop

    def print_into(self, printer: Printer, depth):
        loop = self.plan.loop
        if self.plan.kind == DOALL:
            tag = "doall"
        else:
            reds = ", ".join(f"{r.sym.name}:{r.op}:{r.identity!r}" for r in self.plan.reductions)
            tag = f"doacross[{reds}]"
        start = len(printer.lines)
        printer.stmt(loop, depth)
        printer.lines[start] = printer.indent_unit * depth + tag + " " + printer.lines[start].lstrip()


@dataclass
class FunctionPlan:
    name: str
    parallel: A.FunctionDecl
    sequential: Optional[A.FunctionDecl] = None  # None when not cloned

    @property
    def cloned(self):
        return self.sequential is not None


@dataclass
class ParallelPlan:
    program: A.Program
    table: object
    functions: dict  # name -> FunctionPlan
    placements: list
    loops: list
    parallelizable: set
    threshold: int

    def seq_name(self, name):
        return seq_name(name)

    def format(self) -> str:
        printer = Printer()
        for red in self.program.reductions:
            printer.emit(0, f"@reduce({red.op}, {format_expr(red.identity)});")
        first = not self.program.reductions
        for fp in self.functions.values():
            decls = [fp.parallel] + ([fp.sequential] if fp.cloned else [])
            for decl in decls:
                if not first:
                    printer.lines.append("")
                first = False
                printer.function(decl)
        return "\n".join(printer.lines) + "\n"


def seq_name(name):
    return f"{name}__seq"
