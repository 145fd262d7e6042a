"""Lexing, parsing and name resolution for the ``.mpl`` language."""

from autopar.frontend import ast
from autopar.frontend.printer import format_program
from autopar.frontend.resolver import load_program, parse_program

__all__ = ["ast", "count_block", "count_statements", "format_program", "load_program", "parse_program"]


def count_statements(fn) -> int:
    """Number of statement nodes in ``fn``'s body after loop desugaring.

    Blocks are containers and do not count. A ``for`` desugars to its init
    plus a ``while``; the step is folded into the loop and not counted.
    """
    return _count(fn.body.stmts)


def count_block(block) -> int:
    return _count(block.stmts)


def _count(stmts) -> int:
    total = 0
    for s in stmts:
        if isinstance(s, ast.Block):
            total += _count(s.stmts)
        elif isinstance(s, ast.If):
            total += 1 + _count(s.then.stmts)
            if s.orelse is not None:
                total += _count(s.orelse.stmts)
        elif isinstance(s, ast.For):
            total += (1 if s.init is not None else 0) + 1 + _count(s.body.stmts)
        elif isinstance(s, (ast.While, ast.ForEach)):
            total += 1 + _count(s.body.stmts)
        else:
            total += 1
    return total
