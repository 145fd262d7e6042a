"""Declared signatures for builtin/external functions."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from autopar.errors import Diagnostic

_PERM_RE = re.compile(r"^(read|write|control|atomic)\(([A-Za-z_][A-Za-z0-9_]*)\)$")


class ExternalsFormatError(Diagnostic):
    kind = "externals error"


@dataclass
class ExternalSignature:
    name: str
    # (permission kind, group token), tokens are argN / args / return / a global name
    perms: list = field(default_factory=list)
    blocking: bool = False
    atomic: tuple = ()


def parse_externals(text: str, origin: str = "<externals>") -> dict:
    table = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ExternalsFormatError(f"{origin}:{lineno}: expected 'name: permissions'")
        name, rest = (part.strip() for part in line.split(":", 1))
        sig = ExternalSignature(name)
        for item in rest.split():
            if item == "blocking":
                sig.blocking = True
                continue
            m = _PERM_RE.match(item)
            if m is None:
                raise ExternalsFormatError(f"{origin}:{lineno}: bad permission '{item}'")
            kind, group = m.groups()
            if kind == "atomic":
                sig.atomic += (group,)
            else:
                sig.perms.append((kind, group))
        table[name] = sig
    return table


def default_externals() -> dict:
    text = resources.files("autopar.analysis").joinpath("externals.sig").read_text()
    return parse_externals(text, "externals.sig")


def load_externals(path, overlay=True) -> dict:
    """Entries of ``path``, on top of the bundled defaults unless ``overlay`` is off."""
    table = default_externals() if overlay else {}
    with open(path, encoding="utf-8") as fh:
        table.update(parse_externals(fh.read(), str(path)))
    return table
