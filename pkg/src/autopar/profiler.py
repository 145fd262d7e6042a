"""Per-run execution statistics.

Every thread records into its own ``Counters`` object; ``merge`` sums them
once the runtime is quiescent, so the hot paths never share a lock.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


@dataclass
class Counters:
    worker: int = -1  # -1 for threads outside the worker pool
    tasks_created: int = 0
    tasks_inlined: int = 0
    steals: Counter = field(default_factory=Counter)
    dependencies_unfulfilled: int = 0
    executed: int = 0
    max_local_queue: int = 0
    decider_consultations: int = 0


@dataclass
class RunStats:
    tasks_created: int = 0
    tasks_inlined: int = 0
    steals: dict = field(default_factory=dict)  # policy -> count
    dependencies_unfulfilled: int = 0
    wall_time_nanos: int = 0
    per_worker: list = field(default_factory=list)  # executed task counts
    external_executed: int = 0  # tasks run on blocking helpers
    max_observed_local_queue: int = 0
    decider_consultations: int = 0
    config: dict = field(default_factory=dict)

    @property
    def total_steals(self):
        return sum(self.steals.values())

    def to_dict(self) -> dict:
        return {
            "schemaVersion": SCHEMA_VERSION,
            "tasksCreated": self.tasks_created,
            "tasksInlined": self.tasks_inlined,
            "steals": dict(sorted(self.steals.items())),
            "totalSteals": self.total_steals,
            "dependenciesUnfulfilled": self.dependencies_unfulfilled,
            "wallTimeNanos": self.wall_time_nanos,
            "perWorker": list(self.per_worker),
            "externalExecuted": self.external_executed,
            "maxObservedLocalQueue": self.max_observed_local_queue,
            "deciderConsultations": self.decider_consultations,
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunStats":
        return cls(
            tasks_created=data["tasksCreated"],
            tasks_inlined=data["tasksInlined"],
            steals=dict(data["steals"]),
            dependencies_unfulfilled=data["dependenciesUnfulfilled"],
            wall_time_nanos=data["wallTimeNanos"],
            per_worker=list(data["perWorker"]),
            external_executed=data.get("externalExecuted", 0),
            max_observed_local_queue=data["maxObservedLocalQueue"],
            decider_consultations=data["deciderConsultations"],
            config=dict(data.get("config", {})),
        )


def merge(counters, n_workers: int) -> RunStats:
    """Sum thread-local counters; the result does not depend on their order."""
    stats = RunStats(per_worker=[0] * n_workers)
    steals = Counter()
    for c in counters:
        stats.tasks_created += c.tasks_created
        stats.tasks_inlined += c.tasks_inlined
        steals.update(c.steals)
        stats.dependencies_unfulfilled += c.dependencies_unfulfilled
        stats.decider_consultations += c.decider_consultations
        stats.max_observed_local_queue = max(stats.max_observed_local_queue, c.max_local_queue)
        if 0 <= c.worker < n_workers:
            stats.per_worker[c.worker] += c.executed
        else:
            stats.external_executed += c.executed
    stats.steals = dict(steals)
    return stats


class Profiler:
    """Hands each thread its own counters; disabled profilers record nothing."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._local = threading.local()
        self._all = []
        self._lock = threading.Lock()

    def counters(self, worker: int = -1) -> Counters:
        c = getattr(self._local, "c", None)
        if c is None:
            c = Counters(worker)
            self._local.c = c
            with self._lock:
                self._all.append(c)
        return c

    def created(self, n=1):
        if self.enabled:
            self.counters().tasks_created += n

    def inlined(self):
        if self.enabled:
            self.counters().tasks_inlined += 1

    def stole(self, policy):
        if self.enabled:
            self.counters().steals[policy] += 1

    def parked(self):
        if self.enabled:
            self.counters().dependencies_unfulfilled += 1

    def executed(self):
        if self.enabled:
            self.counters().executed += 1

    def queue_length(self, n):
        if self.enabled:
            c = self.counters()
            if n > c.max_local_queue:
                c.max_local_queue = n

    def consulted(self):
        if self.enabled:
            self.counters().decider_consultations += 1

    def stats(self, n_workers: int, wall_time_nanos: int = 0, config=None) -> RunStats:
        with self._lock:
            snapshot = list(self._all)
        if self.enabled:
            stats = merge(snapshot, n_workers)
            stats.wall_time_nanos = wall_time_nanos
        else:
            stats = RunStats(per_worker=[0] * n_workers)
        stats.config = dict(config or {})
        return stats


def emit(stats: RunStats, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(stats.to_dict(), indent=2, sort_keys=False)
    if fmt == "table":
        return format_table(stats)
    raise ValueError(f"unknown profile format {fmt!r}")


def parse(text: str) -> RunStats:
    return RunStats.from_dict(json.loads(text))


def format_table(stats: RunStats) -> str:
    steals = ", ".join(f"{k}={v}" for k, v in sorted(stats.steals.items())) or "0"
    rows = [
        ("tasks created", stats.tasks_created),
        ("tasks inlined", stats.tasks_inlined),
        ("steals", steals),
        ("dependencies unfulfilled", stats.dependencies_unfulfilled),
        ("wall time (ms)", f"{stats.wall_time_nanos / 1e6:.3f}"),
        ("executed per worker", " ".join(map(str, stats.per_worker)) or "-"),
        ("executed on helpers", stats.external_executed),
        ("max local queue", stats.max_observed_local_queue),
        ("decider consultations", stats.decider_consultations),
    ]
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)
