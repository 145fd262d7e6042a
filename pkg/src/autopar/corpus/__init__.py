"""Benchmark programs shipped with the package, with desk-scale and test inputs."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from autopar.frontend import parse_program


@dataclass(frozen=True)
class CorpusProgram:
    name: str
    default_args: tuple  # desk-scale benchmark input
    small_args: tuple  # quick input for tests
    float_result: bool = False  # outputs come from floating-point reductions

    @property
    def filename(self):
        return f"{self.name}.mpl"

    def source(self) -> str:
        return resources.files(__name__).joinpath(self.filename).read_text(encoding="utf-8")

    def path(self) -> str:
        return str(resources.files(__name__).joinpath(self.filename))

    def load(self):
        return parse_program(self.source(), self.filename)


PROGRAMS = {
    p.name: p
    for p in [
        CorpusProgram("fib", (27,), (15,)),
        CorpusProgram("mergesort", (1 << 20,), (600,)),
        CorpusProgram("pi", (1_000_000,), (3000,), float_result=True),
        CorpusProgram("integrate", (24, 1e-7), (6, 1e-3)),
        CorpusProgram("nbody", (500, 3), (12, 2), float_result=True),
        CorpusProgram("health", (3, 4, 64), (2, 2, 16)),
        CorpusProgram("fft", (16,), (6,), float_result=True),
        CorpusProgram("blackscholes", (10_000,), (300,), float_result=True),
    ]
}

# Fibonacci-shaped recursion with a numeric kernel at the leaves.
EXTRA = {"fib_heavy": CorpusProgram("fib_heavy", (16, 200_000), (8, 1000))}

TABLE1 = tuple(PROGRAMS)


def get(name: str) -> CorpusProgram:
    if name in PROGRAMS:
        return PROGRAMS[name]
    if name in EXTRA:
        return EXTRA[name]
    raise KeyError(f"no corpus program named {name!r}")


def names(include_extra=False):
    return list(PROGRAMS) + (list(EXTRA) if include_extra else [])
