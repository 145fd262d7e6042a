"""Syntax tree for the mini procedural language.

Every node carries a ``nid`` (unique per parse) and a ``span``. Both are
excluded from equality so that structurally identical trees compare equal
regardless of where they came from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid span {self.line}:{self.column}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


NOSPAN = SourceSpan("<builtin>", 1, 1, 0)


@dataclass(frozen=True)
class Type:
    base: str  # int | float | bool | void
    array: bool = False

    def __str__(self):
        return self.base + ("[]" if self.array else "")

    @property
    def scalar(self):
        return not self.array and self.base != "void"


INT = Type("int")
FLOAT = Type("float")
BOOL = Type("bool")
VOID = Type("void")


@dataclass(eq=False)
class Symbol:
    """A declared variable. ``uid`` is unique within its function."""

    name: str
    uid: str
    type: Type
    slot: int
    function: str
    is_param: bool = False

    def __repr__(self):
        return f"Symbol({self.function}.{self.uid}:{self.type})"


def _meta():
    return field(default=None, compare=False, repr=False)


@dataclass
class Node:
    def children(self) -> Iterator["Node"]:
        for name in self.__dataclass_fields__:
            if name in ("nid", "span", "sym", "ty", "target", "monotone", "induction"):
                continue
            value = getattr(self, name)
            if isinstance(value, Node):
                yield value
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, Node):
                        yield item

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children():
            yield from child.walk()


# -- expressions -------------------------------------------------------------


@dataclass
class IntLit(Node):
    value: int
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class FloatLit(Node):
    value: float
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class BoolLit(Node):
    value: bool
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class Var(Node):
    name: str
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()
    sym: Symbol = _meta()


@dataclass
class Index(Node):
    array: Var
    index: "Expr"
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class Call(Node):
    name: str
    args: list
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()
    # "builtin" or "user"; set by the resolver
    target: str = _meta()


@dataclass
class BinOp(Node):
    op: str
    left: "Expr"
    right: "Expr"
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class UnaryOp(Node):
    op: str
    operand: "Expr"
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


@dataclass
class NewArray(Node):
    elem: Type
    size: "Expr"
    nid: int = _meta()
    span: SourceSpan = _meta()
    ty: Type = _meta()


Expr = Union[IntLit, FloatLit, BoolLit, Var, Index, Call, BinOp, UnaryOp, NewArray]


# -- statements --------------------------------------------------------------


@dataclass
class Block(Node):
    stmts: list
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class VarDecl(Node):
    type: Type
    name: str
    init: Optional[Expr]
    nid: int = _meta()
    span: SourceSpan = _meta()
    sym: Symbol = _meta()


@dataclass
class Assign(Node):
    name: str
    value: Expr
    nid: int = _meta()
    span: SourceSpan = _meta()
    sym: Symbol = _meta()


@dataclass
class ArrayStore(Node):
    name: str
    index: Expr
    value: Expr
    nid: int = _meta()
    span: SourceSpan = _meta()
    sym: Symbol = _meta()


@dataclass
class If(Node):
    cond: Expr
    then: Block
    orelse: Optional[Block]
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class While(Node):
    cond: Expr
    body: Block
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class For(Node):
    init: Optional["Stmt"]
    cond: Optional[Expr]
    step: Optional["Stmt"]
    body: Block
    nid: int = _meta()
    span: SourceSpan = _meta()
    # set by the resolver: step is i = i +/- c with c literal or loop-invariant
    monotone: bool = _meta()
    induction: Symbol = _meta()


@dataclass
class ForEach(Node):
    elem: Type
    name: str
    array: Expr
    body: Block
    nid: int = _meta()
    span: SourceSpan = _meta()
    sym: Symbol = _meta()


@dataclass
class Return(Node):
    value: Optional[Expr]
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class Break(Node):
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class Continue(Node):
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class ExprStmt(Node):
    expr: Expr
    nid: int = _meta()
    span: SourceSpan = _meta()


Stmt = Union[Block, VarDecl, Assign, ArrayStore, If, While, For, ForEach,
             Return, Break, Continue, ExprStmt]

STMT_TYPES = (Block, VarDecl, Assign, ArrayStore, If, While, For, ForEach,
              Return, Break, Continue, ExprStmt)
LOOP_TYPES = (While, For, ForEach)


@dataclass
class Param(Node):
    name: str
    type: Type
    nid: int = _meta()
    span: SourceSpan = _meta()
    sym: Symbol = _meta()


@dataclass
class FunctionDecl(Node):
    name: str
    params: list
    return_type: Type
    body: Block
    nid: int = _meta()
    span: SourceSpan = _meta()
    nslots: int = _meta()


@dataclass
class ReduceDecl(Node):
    """``@reduce(op, identity);`` registers a user reduction operator."""

    op: str
    identity: Expr
    nid: int = _meta()
    span: SourceSpan = _meta()


@dataclass
class Program(Node):
    functions: list
    reductions: list = field(default_factory=list)
    entry: str = "main"
    source_name: str = field(default="<input>", compare=False, repr=False)

    def function(self, name: str) -> FunctionDecl:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    @property
    def by_name(self) -> dict:
        return {fn.name: fn for fn in self.functions}

    def nodes(self) -> Iterator[Node]:
        for fn in self.functions:
            yield from fn.walk()
