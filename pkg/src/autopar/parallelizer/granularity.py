"""Compile-time granularity: which functions are worth parallelizing."""

from __future__ import annotations

import networkx as nx

from autopar.frontend import ast as A, count_statements

DEFAULT_THRESHOLD = 10


def has_loop(fn: A.FunctionDecl) -> bool:
    return any(isinstance(n, A.LOOP_TYPES) for n in fn.body.walk())


def recursive_functions(graph: nx.DiGraph) -> set:
    out = set()
    for comp in nx.strongly_connected_components(graph):
        if len(comp) > 1 or any(graph.has_edge(f, f) for f in comp):
            out |= comp
    return out


def parallelizable_functions(program: A.Program, table, threshold=DEFAULT_THRESHOLD) -> set:
    """Judge every function in one pass over the call graph, callees first."""
    graph = table.callgraph
    recursive = recursive_functions(graph)
    fns = program.by_name
    cond = nx.condensation(graph)
    members = cond.graph["mapping"]
    by_comp = {}
    for name, comp in members.items():
        by_comp.setdefault(comp, []).append(name)
    judged = set()
    for comp in reversed(list(nx.topological_sort(cond))):
        names = by_comp[comp]
        expensive_call = any(
            callee in judged for name in names for callee in graph.successors(name)
        )
        for name in names:
            fn = fns[name]
            if (
                name in recursive
                or has_loop(fn)
                or count_statements(fn) >= threshold
                or expensive_call
            ):
                judged.add(name)
        # a cycle member that became expensive makes the whole cycle expensive
        if judged & set(names):
            judged.update(names)
    return judged


def should_parallelize(fn: A.FunctionDecl, program: A.Program, table,
                       threshold=DEFAULT_THRESHOLD) -> bool:
    return fn.name in parallelizable_functions(program, table, threshold)
