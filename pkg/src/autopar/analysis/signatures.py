"""One-pass signature extraction with recursion backpatching.

Callees are analysed before the call site that needs them. A call to a
function still on the analysis stack receives that function's partial
summary; when the first-entered member of a recursive cycle finishes, only
the cycle's members are walked again until their summaries stop changing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from autopar.analysis.datagroups import (
    ARRAY, BLOCK, CONTROL, EMPTY, GLOBAL, INDEXED, LOCAL, METHOD, READ, WRITE,
    Datagroup, Permission, Signature, control, read, write,
)
from autopar.analysis.externals import default_externals
from autopar.errors import MissingExternalSignature
from autopar.frontend import ast as A

RETURN = "return"


@dataclass
class SignatureTable:
    sigs: dict = field(default_factory=dict)  # nid -> Signature
    display: dict = field(default_factory=dict)  # nid -> list of annotation tokens
    summaries: dict = field(default_factory=dict)  # function -> Signature
    alias: dict = field(default_factory=dict)  # function -> {uid: canonical uid}
    blocking: set = field(default_factory=set)  # functions that may block
    atomic: dict = field(default_factory=dict)  # function -> tuple of atomic groups
    second_pass: list = field(default_factory=list)  # functions re-walked for recursion
    callgraph: object = None

    def __getitem__(self, node) -> Signature:
        return self.sigs[node.nid]

    def summary(self, name) -> Signature:
        return self.summaries[name]


def union(sigs) -> Signature:
    out = set()
    for s in sigs:
        out.update(s)
    return Signature(out)


def build_callgraph(program: A.Program) -> nx.DiGraph:
    g = nx.DiGraph()
    for fn in program.functions:
        g.add_node(fn.name)
        for node in fn.body.walk():
            if isinstance(node, A.Call) and node.target == "user":
                g.add_edge(fn.name, node.name)
    return g


def build_alias_table(fn: A.FunctionDecl) -> dict:
    """Flow-insensitive union of array variables assigned into each other.

    Parameters win as representatives so that writes through an alias of a
    parameter are visible to callers.
    """
    parent = {}
    is_param = {}

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    def add(sym):
        if sym.uid not in parent:
            parent[sym.uid] = sym.uid
            is_param[sym.uid] = sym.is_param

    def unite(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return
        if is_param[rb] and not is_param[ra]:
            ra, rb = rb, ra
        parent[rb] = ra

    for p in fn.params:
        if p.type.array:
            add(p.sym)
    for node in fn.body.walk():
        if isinstance(node, (A.VarDecl, A.Assign)) and node.sym.type.array:
            add(node.sym)
            value = node.init if isinstance(node, A.VarDecl) else node.value
            if isinstance(value, A.Var):
                add(value.sym)
                unite(value.sym.uid, node.sym.uid)
    return {u: find(u) for u in parent}


def affine_index(expr):
    """``i`` -> (i, 0); ``i + c`` / ``c + i`` / ``i - c`` -> (i, +-c); else None."""
    if isinstance(expr, A.Var):
        return expr.sym, 0
    if isinstance(expr, A.BinOp) and expr.op in ("+", "-"):
        l, r = expr.left, expr.right
        if isinstance(l, A.Var) and isinstance(r, A.IntLit):
            return l.sym, r.value if expr.op == "+" else -r.value
        if expr.op == "+" and isinstance(r, A.Var) and isinstance(l, A.IntLit):
            return r.sym, l.value
    return None


class _FunctionWalker:
    """Computes node signatures for a single function body."""

    def __init__(self, analyzer, fn: A.FunctionDecl):
        self.an = analyzer
        self.fn = fn
        self.name = fn.name
        self.alias = analyzer.table.alias[fn.name]
        self.loops = []  # induction symbols of enclosing monotone for-loops
        self.blocks = []  # control groups of enclosing blocks
        self.loop_groups = []  # control groups of enclosing loop bodies
        self.blocking = False
        self.atomic = set()

    def put(self, node, sig, display):
        self.an.table.sigs[node.nid] = sig
        self.an.table.display[node.nid] = list(dict.fromkeys(display))
        return sig

    # -- groups --------------------------------------------------------------

    def local(self, sym):
        return Datagroup.local(self.name, sym.uid)

    def array_identity(self, sym):
        return self.alias.get(sym.uid, sym.uid)

    def array_group(self, sym, index_expr=None):
        ident = self.array_identity(sym)
        if index_expr is not None:
            aff = affine_index(index_expr)
            if aff is not None and aff[0] in self.loops:
                return Datagroup.indexed(self.name, ident, aff[0].uid, aff[1])
        return Datagroup.array(self.name, ident)

    def block_group(self, block, top=False):
        if top:
            return Datagroup.method(self.name)
        return Datagroup.block(self.name, block.nid)

    # -- functions and blocks ------------------------------------------------

    def run(self) -> Signature:
        for p in self.fn.params:
            self.put(p, EMPTY, [])
        body = self.block(self.fn.body, top=True)
        return body

    def block(self, block, top=False, loop_body=False):
        group = self.block_group(block, top)
        self.blocks.append(group)
        if loop_body:
            self.loop_groups.append(group)
        sig = union(self.stmt(s) for s in block.stmts)
        if loop_body:
            self.loop_groups.pop()
        self.blocks.pop()
        return self.put(block, sig, [])

    def enclosing_control(self):
        return control(self.blocks[-1])

    # -- statements ----------------------------------------------------------

    def stmt(self, s) -> Signature:
        if isinstance(s, A.Block):
            return self.block(s)
        if isinstance(s, A.VarDecl):
            sig, disp = self.expr(s.init) if s.init is not None else (EMPTY, [])
            w = write(self.local(s.sym))
            return self.put(s, sig | {w}, disp + [str(w)])
        if isinstance(s, A.Assign):
            sig, disp = self.expr(s.value)
            w = write(self.local(s.sym))
            return self.put(s, sig | {w}, disp + [str(w)])
        if isinstance(s, A.ArrayStore):
            isig, idisp = self.expr(s.index)
            vsig, vdisp = self.expr(s.value)
            ref = read(self.local(s.sym))
            w = write(self.array_group(s.sym, s.index))
            return self.put(s, isig | vsig | {ref, w}, idisp + vdisp + [str(w)])
        if isinstance(s, A.ExprStmt):
            sig, disp = self.expr(s.expr)
            return self.put(s, sig, disp)
        if isinstance(s, A.Return):
            sig, disp = self.expr(s.value) if s.value is not None else (EMPTY, [])
            extra = {control(Datagroup.method(self.name))}
            if s.value is not None:
                extra.add(write(Datagroup.local(self.name, RETURN)))
            return self.put(s, sig | extra, disp + [str(p) for p in sorted(extra)])
        if isinstance(s, (A.Break, A.Continue)):
            c = control(self.loop_groups[-1])
            return self.put(s, Signature({c}), [str(c)])
        if isinstance(s, A.If):
            csig, cdisp = self.expr(s.cond)
            ctl = self.enclosing_control()
            parts = [csig, Signature({ctl}), self.block(s.then)]
            if s.orelse is not None:
                parts.append(self.block(s.orelse))
            return self.put(s, union(parts), cdisp + [str(ctl)])
        if isinstance(s, A.While):
            ctl = self.enclosing_control()
            csig, cdisp = self.expr(s.cond)
            body = self.block(s.body, loop_body=True)
            return self.put(s, csig | body | {ctl}, cdisp + [str(ctl)])
        if isinstance(s, A.For):
            return self.for_loop(s)
        if isinstance(s, A.ForEach):
            ctl = self.enclosing_control()
            asig, adisp = self.expr(s.array)
            elems = set()
            if isinstance(s.array, A.Var):
                elems.add(read(self.array_group(s.array.sym)))
            w = write(self.local(s.sym))
            body = self.block(s.body, loop_body=True)
            header = asig | elems | {w, ctl}
            return self.put(s, header | body, adisp + [str(p) for p in sorted(elems | {w, ctl})])
        raise TypeError(s)  # pragma: no cover

    def for_loop(self, s: A.For) -> Signature:
        ctl = self.enclosing_control()
        parts = [Signature({ctl})]
        disp = []
        if s.init is not None:
            parts.append(self.stmt(s.init))
            disp += self.an.table.display[s.init.nid]
        if s.cond is not None:
            csig, cdisp = self.expr(s.cond)
            parts.append(csig)
            disp += cdisp
        pushed = s.monotone and s.induction is not None
        if pushed:
            self.loops.append(s.induction)
        parts.append(self.block(s.body, loop_body=True))
        if s.step is not None:
            parts.append(self.stmt(s.step))
        if pushed:
            self.loops.pop()
        sig = union(parts)
        if pushed:
            sig = self.widen_for(sig, s.induction)
        return self.put(s, sig, disp + [str(ctl)])

    def widen_for(self, sig, induction):
        """Indexed groups keyed on a loop's own induction variable widen at the loop."""
        out = set()
        for p in sig:
            g = p.group
            if g.kind == INDEXED and g.index[0] == induction.uid:
                p = Permission(p.kind, g.widen())
            out.add(p)
        return Signature(out)

    # -- expressions: return (signature, display tokens) ---------------------

    def expr(self, e):
        sig, disp = self._expr(e)
        self.put(e, sig, disp)
        return sig, disp

    def _expr(self, e):
        if isinstance(e, (A.IntLit, A.FloatLit, A.BoolLit)):
            return EMPTY, []
        if isinstance(e, A.Var):
            r = read(self.local(e.sym))
            return Signature({r}), [str(r)]
        if isinstance(e, A.Index):
            isig, idisp = self.expr(e.index)
            self.put(e.array, Signature({read(self.local(e.array.sym))}), [])
            ref = read(self.local(e.array.sym))
            r = read(self.array_group(e.array.sym, e.index))
            return isig | {ref, r}, idisp + [str(r)]
        if isinstance(e, A.NewArray):
            return self.expr(e.size)
        if isinstance(e, A.UnaryOp):
            return self.expr(e.operand)
        if isinstance(e, A.BinOp):
            ls, ld = self.expr(e.left)
            rs, rd = self.expr(e.right)
            return ls | rs, ld + rd
        if isinstance(e, A.Call):
            return self.call(e)
        raise TypeError(e)  # pragma: no cover

    def call(self, e: A.Call):
        arg_results = [self.expr(a) for a in e.args]
        args_sig = union(s for s, _ in arg_results)
        args_disp = [t for _, d in arg_results for t in d]
        if e.target == "user":
            summary = self.an.summary_for_call(e.name)
            inst = self.an.resolve_call(e, summary, self)
            table = self.an.table
            if e.name in table.blocking:
                self.blocking = True
            self.atomic.update(table.atomic.get(e.name, ()))
            return args_sig | inst, [f"call({e.name})"] + args_disp
        ext = self.an.externals.get(e.name)
        if ext is None:
            raise MissingExternalSignature(e.name, e.span)
        inst = self.an.instantiate_external(e, ext, self)
        if ext.blocking:
            self.blocking = True
        self.atomic.update(ext.atomic)
        own = [str(p) for p in sorted(inst) if p.group.kind == GLOBAL]
        return args_sig | inst, args_disp + own


class Analyzer:
    def __init__(self, program: A.Program, externals=None):
        self.program = program
        self.externals = default_externals() if externals is None else externals
        self.table = SignatureTable()
        self.fns = program.by_name
        self.stack = []
        self.finished = set()  # walked at least once
        self.done = set()  # summary final
        self.partial = {}
        graph = build_callgraph(program)
        self.table.callgraph = graph
        self.scc_of = {}
        for comp in nx.strongly_connected_components(graph):
            comp = frozenset(comp)
            recursive = len(comp) > 1 or any(graph.has_edge(f, f) for f in comp)
            for f in comp:
                self.scc_of[f] = comp if recursive else None
        self.scc_root = {}

    def run(self) -> SignatureTable:
        for fn in self.program.functions:
            self.table.alias[fn.name] = build_alias_table(fn)
        for fn in self.program.functions:
            self.analyze(fn.name)
        for red in self.program.reductions:
            self.table.sigs[red.nid] = EMPTY
            self.table.display[red.nid] = []
            self.table.sigs[red.identity.nid] = EMPTY
        return self.table

    def summary_for_call(self, name) -> Signature:
        if name in self.done or name in self.stack or name in self.finished:
            return self.partial.get(name, EMPTY)
        return self.analyze(name)

    def analyze(self, name) -> Signature:
        if name in self.done:
            return self.table.summaries[name]
        scc = self.scc_of[name]
        if scc is not None and scc not in self.scc_root:
            self.scc_root[scc] = name
        self.stack.append(name)
        self.walk(name)
        self.stack.pop()
        self.finished.add(name)
        if scc is None:
            self.done.add(name)
        elif self.scc_root[scc] == name:
            self.fixpoint(scc)
        return self.partial[name]

    def walk(self, name):
        fn = self.fns[name]
        walker = _FunctionWalker(self, fn)
        body = walker.run()
        summary = self.make_summary(fn, body)
        self.partial[name] = summary
        self.table.summaries[name] = summary
        self.table.sigs[fn.nid] = summary
        self.table.display[fn.nid] = list(dict.fromkeys(str(p) for p in sorted(summary)))
        if walker.blocking:
            self.table.blocking.add(name)
        if walker.atomic or name in self.table.atomic:
            self.table.atomic[name] = tuple(sorted(set(self.table.atomic.get(name, ())) | walker.atomic))
        return summary

    def fixpoint(self, scc):
        """Second pass over one recursive cycle, iterated until stable."""
        order = [f.name for f in self.program.functions if f.name in scc]
        self.table.second_pass.extend(order)
        changed = True
        while changed:
            changed = False
            for name in order:
                before = (self.partial[name], name in self.table.blocking,
                          self.table.atomic.get(name))
                self.walk(name)
                after = (self.partial[name], name in self.table.blocking,
                         self.table.atomic.get(name))
                changed |= before != after
        self.done.update(scc)

    def make_summary(self, fn: A.FunctionDecl, body: Signature) -> Signature:
        """Body permissions visible to callers (plus the method's own control)."""
        params = {p.sym.uid for p in fn.params}
        alias = self.table.alias[fn.name]
        out = {control(Datagroup.method(fn.name))}
        for p in body:
            g = p.group.widen()
            if g.kind == LOCAL and g.scope == fn.name:
                if g.name == RETURN and p.kind == WRITE:
                    out.add(p)
                elif g.name in params and p.kind == READ:
                    out.add(Permission(READ, g))
            elif g.kind == ARRAY and g.scope == fn.name:
                if alias.get(g.name, g.name) in params:
                    out.add(Permission(p.kind, g))
            elif g.kind == GLOBAL:
                out.add(p)
        return Signature(out)

    # -- call instantiation --------------------------------------------------

    def resolve_call(self, call: A.Call, summary: Signature, walker) -> Signature:
        """Rewrite a callee summary into the caller's datagroups."""
        callee = self.fns[call.name]
        param_index = {p.sym.uid: i for i, p in enumerate(callee.params)}
        out = set()
        for p in summary:
            g = p.group
            if g.kind in (METHOD, BLOCK):
                continue
            if g.kind == GLOBAL:
                out.add(p)
            elif g.kind == LOCAL and g.name == RETURN:
                out.add(write(Datagroup.local(walker.name, f"{RETURN}@{call.nid}")))
            elif g.kind == LOCAL and g.name in param_index:
                arg = call.args[param_index[g.name]]
                out.update(self.arg_groups(arg, p.kind, walker))
            elif g.kind == ARRAY and g.name in param_index:
                arg = call.args[param_index[g.name]]
                out.update(self.arg_groups(arg, p.kind, walker))
        return Signature(out)

    def arg_groups(self, arg, kind, walker):
        if arg.ty is not None and arg.ty.array:
            if isinstance(arg, A.Var):
                return {Permission(kind, walker.array_group(arg.sym))}
            return set()  # freshly allocated array
        if kind != READ:
            return set()
        return {p for p in self.table.sigs.get(arg.nid, EMPTY) if p.kind == READ}

    def instantiate_external(self, call: A.Call, ext, walker) -> Signature:
        out = set()
        for kind, token in ext.perms:
            if token == "return":
                if kind == WRITE:
                    out.add(write(Datagroup.local(walker.name, f"{RETURN}@{call.nid}")))
                continue
            if token == "args" or (token.startswith("arg") and token[3:].isdigit()):
                idxs = range(len(call.args)) if token == "args" else [int(token[3:])]
                for i in idxs:
                    if i < len(call.args):
                        out.update(self.arg_groups(call.args[i], kind, walker))
                continue
            out.add(Permission(kind, Datagroup.glob(token)))
        for token in ext.atomic:
            out.add(write(Datagroup.glob(token)))
        return Signature(out)


def extract_signatures(program: A.Program, externals=None) -> SignatureTable:
    """Signature of every node of ``program``; see :class:`SignatureTable`."""
    return Analyzer(program, externals).run()
