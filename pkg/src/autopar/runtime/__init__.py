"""Task runtime: futures, work stealing, blocking helpers and loop splitting."""

from autopar.runtime.pool import STEAL_POLICIES, Runtime, default_workers
from autopar.runtime.splitting import BINARY, LAZY, SplitConfig, map_reduce, parallel_for
from autopar.runtime.task import (
    ATOMIC, BLOCKING, NONBLOCKING, CycleError, Future, IllegalTransition, State, Task,
)

__all__ = [
    "ATOMIC", "BINARY", "BLOCKING", "LAZY", "NONBLOCKING", "STEAL_POLICIES", "CycleError",
    "Future", "IllegalTransition", "Runtime", "SplitConfig", "State", "Task",
    "default_workers", "map_reduce", "parallel_for",
]
