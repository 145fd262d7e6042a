"""Range splitting for parallel loops: binary and lazy binary."""

from __future__ import annotations

from dataclasses import dataclass

from autopar.runtime.task import LOOPS, Future

BINARY = "binary"
LAZY = "lazy"
DEFAULT_PPS = 3


@dataclass(frozen=True)
class SplitConfig:
    mode: str = LAZY
    pps: int = DEFAULT_PPS  # iterations between split checks in lazy mode

    def __post_init__(self):
        if self.mode not in (BINARY, LAZY):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if self.pps < 1:
            raise ValueError("pps must be >= 1")

    def label(self):
        return BINARY if self.mode == BINARY else f"lazy{self.pps}"


def _binary(rt, lo, hi, run_slice, merge):
    """Split in two child tasks while the decider agrees, else run the slice."""
    if hi - lo > 1 and rt.should_create():
        mid = (lo + hi) // 2
        left = rt.submit(lambda: _binary(rt, lo, mid, run_slice, merge), hints=(LOOPS,))
        right = rt.submit(lambda: _binary(rt, mid, hi, run_slice, merge), hints=(LOOPS,))
        return merge(left.get(), right.get())
    return run_slice(lo, hi, None)


def _lazy(rt, lo, hi, pps, start_slice, step, finish, merge):
    """Run iterations; every ``pps`` of them, maybe hand off the upper half of the rest."""
    state = start_slice()
    children = []
    i = lo
    executed = 0
    while i < hi:
        step(state, i)
        i += 1
        executed += 1
        if executed % pps == 0 and rt.should_create():
            remaining = hi - i
            if remaining > 1:
                mid = i + remaining // 2
                children.append(rt.submit(
                    lambda a=mid, b=hi: _lazy(rt, a, b, pps, start_slice, step, finish, merge),
                    hints=(LOOPS,),
                ))
                hi = mid
    result = finish(state)
    for child in children:
        result = merge(result, child.get())
    return result


def _drive(rt, start, stop, split, start_slice, step, finish, merge):
    split = split if split is not None else rt.split
    if stop <= start:
        return Future.completed(finish(start_slice()))
    if split.mode == BINARY:
        def run_slice(lo, hi, _):
            state = start_slice()
            for i in range(lo, hi):
                step(state, i)
            return finish(state)
        body = lambda: _binary(rt, start, stop, run_slice, merge)  # noqa: E731
    else:
        body = lambda: _lazy(rt, start, stop, split.pps, start_slice, step, finish, merge)  # noqa: E731
    return rt.submit(body, hints=(LOOPS,), name="loop")


def parallel_for(rt, start, stop, body, split=None, local=None) -> Future:
    """Run ``body(state, i)`` for every i in [start, stop).

    ``local()`` makes the private state of one slice (``None`` by default).
    """
    make = local if local is not None else (lambda: None)
    return _drive(rt, start, stop, split, make, body, lambda s: None, lambda a, b: None)


def combine_tuples(reducers, a, b):
    return tuple(op(x, y) for (op, _), x, y in zip(reducers, a, b))


def map_reduce(rt, start, stop, body, reducers, split=None, local=None, extract=None) -> Future:
    """Fold [start, stop) with private accumulators per slice.

    ``reducers`` is a list of ``(combine, identity)``. By default each slice
    state is a list of identities that ``body(acc, i)`` updates in place.
    Slice results are merged pairwise with the combine functions.
    """
    make = local if local is not None else (lambda: [ident for _, ident in reducers])
    read = extract if extract is not None else tuple
    return _drive(rt, start, stop, split, make, body, read,
                  lambda a, b: combine_tuples(reducers, a, b))
