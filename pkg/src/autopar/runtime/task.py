"""Tasks, their lifecycle, and futures."""

from __future__ import annotations

import threading
from enum import IntEnum

NONBLOCKING = "nonblocking"
BLOCKING = "blocking"
ATOMIC = "atomic"
KINDS = (NONBLOCKING, BLOCKING, ATOMIC)

# hints
RECURSIVE = "recursive"
LOOPS = "loops"
SMALL = "small"
LARGE = "large"


class State(IntEnum):
    UNSCHEDULED = 0
    WAITING_DEPS = 1
    READY = 2
    RUNNING = 3
    WAITING_CHILDREN = 4
    COMPLETED = 5


class CycleError(Exception):
    pass


class IllegalTransition(RuntimeError):
    pass


_NO_RESULT = object()


class Task:
    __slots__ = (
        "id", "body", "deps", "parent", "hints", "kind", "groups", "state", "result",
        "error", "depth", "children", "unmet", "body_done", "dependents", "lock",
        "created", "started", "finished", "name", "history",
    )

    def __init__(self, tid, body, deps=(), parent=None, kind=NONBLOCKING, groups=(),
                 hints=frozenset(), name=None, track_history=False):
        if kind not in KINDS:
            raise ValueError(f"unknown task kind {kind!r}")
        if kind == ATOMIC and not groups:
            raise ValueError("atomic tasks need at least one datagroup")
        self.id = tid
        self.body = body
        self.deps = tuple(deps)
        self.parent = parent
        self.hints = frozenset(hints)
        self.kind = kind
        self.groups = tuple(sorted(set(groups)))
        self.state = State.UNSCHEDULED
        self.result = _NO_RESULT
        self.error = None
        self.depth = parent.depth + 1 if parent is not None else 0
        self.children = 0
        self.unmet = 0
        self.body_done = False
        self.dependents = []
        self.lock = threading.Lock()
        self.created = self.started = self.finished = 0
        self.name = name
        self.history = [State.UNSCHEDULED] if track_history else None

    def move(self, new: State):
        """Advance the lifecycle; only forward moves are legal."""
        old = self.state
        if new <= old or (new == State.WAITING_CHILDREN and old != State.RUNNING):
            raise IllegalTransition(f"task {self.id}: {old.name} -> {new.name}")
        if new == State.RUNNING and old != State.READY:
            raise IllegalTransition(f"task {self.id}: {old.name} -> {new.name}")
        self.state = new
        if self.history is not None:
            self.history.append(new)

    @property
    def done(self):
        return self.state == State.COMPLETED

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Task {self.id}{label} {self.state.name}>"


class Future:
    """Result handle of a task, or of work that already ran inline."""

    __slots__ = ("task", "runtime", "_value", "_error")

    def __init__(self, task=None, runtime=None, value=None, error=None):
        self.task = task
        self.runtime = runtime
        self._value = value
        self._error = error

    @classmethod
    def completed(cls, value):
        return cls(value=value)

    @classmethod
    def failed(cls, error):
        return cls(error=error)

    @property
    def done(self):
        return self.task is None or self.task.done

    def get(self):
        if self.task is not None:
            return self.runtime.wait(self)
        if self._error is not None:
            raise self._error
        return self._value

    def __repr__(self):
        return f"<Future {self.task!r}>" if self.task else f"<Future value={self._value!r}>"
