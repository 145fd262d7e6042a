"""Where to create a future: hard and soft dependencies for one invocation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from autopar.analysis.datagroups import Datagroup
from autopar.frontend import ast as A


@dataclass
class ScanResult:
    hard_dep: Optional[A.Node]  # statement after which the future may start
    hard_index: int  # index of hard_dep in the block, -1 if none
    soft_deps: list  # tasks (as recorded in ``tasks``) the future must wait for


def contains(stmt, node) -> bool:
    return any(n is node for n in stmt.walk())


def find_future_position(block: A.Block, stop_index: int, node, table, method: str,
                         block_group: Datagroup, tasks: dict) -> ScanResult:
    """Scan ``block`` in order up to the statement holding ``node``.

    Statements carrying control of the method or of this block become the
    hard dependency. A statement whose signature conflicts with the
    invocation's is a soft dependency when it is already a task (``tasks``
    maps statement nid to the task object) and the hard dependency
    otherwise. The statement that holds the invocation ends the scan before
    it is examined, so it can never be its own dependency.
    """
    theta_node = table.sigs[node.nid]
    method_ctl = Datagroup.method(method)
    hard = None
    hard_index = -1
    soft = []
    for i, stmt in enumerate(block.stmts):
        if i >= stop_index:
            break
        theta = table.sigs[stmt.nid]
        ctls = theta.controls
        if method_ctl in ctls or block_group in ctls:
            hard, hard_index = stmt, i
            continue
        if theta.conflicts_with(theta_node):
            task = tasks.get(stmt.nid)
            if task is not None:
                if task not in soft:
                    soft.append(task)
            else:
                hard, hard_index = stmt, i
    return ScanResult(hard, hard_index, soft)
