"""Diagnostics shared across the toolchain."""

from __future__ import annotations


class Diagnostic(Exception):
    """Base class for user-facing errors; renders as ``file:line:col: message``."""

    kind = "error"

    def __init__(self, message, span=None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self):
        if self.span is None:
            return f"{self.kind}: {self.message}"
        return f"{self.span}: {self.kind}: {self.message}"


class ParseError(Diagnostic):
    kind = "syntax error"

    def __init__(self, message, span=None, expected=()):
        super().__init__(message, span)
        self.expected = tuple(expected)


class ResolveError(Diagnostic):
    kind = "resolve error"


class MissingExternalSignature(Diagnostic):
    kind = "missing external signature"

    def __init__(self, name, span=None):
        super().__init__(f"no signature declared for external '{name}'", span)
        self.name = name


class PlanError(Diagnostic):
    kind = "plan error"


class MplRuntimeError(Diagnostic):
    """A fault raised by a running mini-language program."""

    kind = "runtime error"

    def __init__(self, message, span=None, provenance=None):
        super().__init__(message, span)
        self.provenance = provenance
        self.output = None  # lines printed before the fault, when known

    def __str__(self):
        text = super().__str__()
        if self.provenance:
            text += f" (in task {self.provenance})"
        return text
