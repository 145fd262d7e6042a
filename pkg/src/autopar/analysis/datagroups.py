"""Datagroups, permissions and signatures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

LOCAL = "local"
ARRAY = "array"
INDEXED = "indexed"
METHOD = "method"
BLOCK = "block"
GLOBAL = "global"

READ = "read"
WRITE = "write"
CONTROL = "control"


@dataclass(frozen=True, order=True)
class Datagroup:
    kind: str
    scope: str = ""  # owning function, empty for globals
    name: str = ""
    # (induction variable uid, constant offset) for indexed groups
    index: Optional[tuple] = None

    @classmethod
    def local(cls, fn, uid):
        return cls(LOCAL, fn, uid)

    @classmethod
    def array(cls, fn, uid):
        return cls(ARRAY, fn, uid)

    @classmethod
    def indexed(cls, fn, uid, var, offset):
        return cls(INDEXED, fn, uid, (var, offset))

    @classmethod
    def method(cls, fn):
        return cls(METHOD, fn, fn)

    @classmethod
    def block(cls, fn, block_id):
        return cls(BLOCK, fn, f"block{block_id}")

    @classmethod
    def glob(cls, name="global"):
        return cls(GLOBAL, "", name)

    def widen(self) -> "Datagroup":
        if self.kind == INDEXED:
            return Datagroup(ARRAY, self.scope, self.name)
        return self

    def overlaps(self, other: "Datagroup") -> bool:
        return self.widen() == other.widen()

    def __str__(self):
        if self.kind == INDEXED:
            var, off = self.index
            if off == 0:
                return f"{self.name}[{var}]"
            sign = "+" if off > 0 else "-"
            return f"{self.name}[{var}{sign}{abs(off)}]"
        return self.name


@dataclass(frozen=True, order=True)
class Permission:
    kind: str
    group: Datagroup

    def __str__(self):
        return f"{self.kind}({self.group})"


def read(g):
    return Permission(READ, g)


def write(g):
    return Permission(WRITE, g)


def control(g):
    return Permission(CONTROL, g)


class Signature(frozenset):
    """An order-independent set of permissions."""

    def __new__(cls, perms: Iterable[Permission] = ()):
        return super().__new__(cls, perms)

    def __or__(self, other):
        return Signature(frozenset.__or__(self, other))

    def __and__(self, other):
        return Signature(frozenset.__and__(self, other))

    def __sub__(self, other):
        return Signature(frozenset.__sub__(self, other))

    def groups(self, kind) -> set:
        return {p.group for p in self if p.kind == kind}

    @property
    def reads(self):
        return self.groups(READ)

    @property
    def writes(self):
        return self.groups(WRITE)

    @property
    def controls(self):
        return self.groups(CONTROL)

    def widened(self) -> "Signature":
        return Signature(Permission(p.kind, p.group.widen()) for p in self)

    def conflicts_with(self, other: "Signature") -> bool:
        """Read/write, write/read or write/write overlap on some datagroup."""
        mine_w = self.writes
        theirs_w = other.writes
        if _any_overlap(self.reads, theirs_w):
            return True
        if _any_overlap(mine_w, other.reads):
            return True
        return _any_overlap(mine_w, theirs_w)

    def format(self) -> str:
        return ", ".join(dict.fromkeys(str(p) for p in sorted(self, key=_display_key)))

    def __repr__(self):
        return f"Signature({{{self.format()}}})"


_KIND_ORDER = {READ: 0, WRITE: 1, CONTROL: 2}


def _display_key(p):
    return (_KIND_ORDER[p.kind], str(p.group))


def _any_overlap(a, b) -> bool:
    if not a or not b:
        return False
    wa = {g.widen() for g in a}
    return any(g.widen() in wa for g in b)


EMPTY = Signature()
