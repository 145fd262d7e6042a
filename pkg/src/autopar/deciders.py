"""Granularity policies: create a task or run it inline.

A decider is a callable ``decider(ctx) -> bool`` over a ``DecisionContext``
snapshot. ``True`` means create a task. ``should_seq`` answers the method
entry question and is always the negation.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field

import psutil

INLINE_THRESHOLD_NS = 1_000_000  # ATC: subtrees cheaper than 1 ms are not worth a task


@dataclass
class DecisionContext:
    depth: int = 0  # ancestors of the current task
    active_tasks: int = 0  # created and not yet completed, pool wide
    local_queue: int = 0
    queue_lengths: tuple = ()
    idle_workers: int = 0
    workers: int = 1
    nesting: int = 0  # inline and help-first nesting on this thread
    cpu: float = 0.0
    mem: float = 0.0

    def __post_init__(self):
        for name in ("depth", "active_tasks", "local_queue", "idle_workers", "nesting"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


class Decider:
    name = "decider"
    uses_system = False

    def __call__(self, ctx: DecisionContext) -> bool:
        raise NotImplementedError

    def should_create(self, ctx) -> bool:
        return self(ctx)

    def should_seq(self, ctx) -> bool:
        return not self(ctx)

    def observe(self, depth: int, nanos: int):
        """Completed-subtree timing hook; only ATC keeps samples."""

    def spec(self) -> str:
        return self.name


@dataclass
class Always(Decider):
    value: bool = True

    @property
    def name(self):
        return "always" if self.value else "never"

    def __call__(self, ctx):
        return self.value


@dataclass
class Coin(Decider):
    """Random answers; only useful to show results do not depend on decisions."""

    p: float = 0.5
    seed: int = 0
    name = "coin"

    def __post_init__(self):
        import random
        self._rng = random.Random(self.seed)
        self._lock = threading.Lock()

    def __call__(self, ctx):
        with self._lock:
            return self._rng.random() < self.p


@dataclass
class MaxLevel(Decider):
    level: int = 12
    name = "maxlevel"

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("max level must be >= 1")

    def __call__(self, ctx):
        return ctx.depth < self.level

    def spec(self):
        return f"maxlevel:{self.level}"


@dataclass
class MaxTasks(Decider):
    tasks: int | None = None  # None: one per worker
    name = "maxtasks"

    def __call__(self, ctx):
        limit = self.tasks if self.tasks is not None else ctx.workers
        return ctx.active_tasks < limit

    def spec(self):
        return "maxtasks" if self.tasks is None else f"maxtasks:{self.tasks}"


class LoadBased(Decider):
    name = "load"

    def __call__(self, ctx):
        return ctx.idle_workers >= 1

    def __eq__(self, other):
        return isinstance(other, LoadBased)

    def __hash__(self):
        return hash(LoadBased)


@dataclass
class Surplus(Decider):
    threshold: int = 3
    name = "surplus"

    def estimate(self, ctx) -> float:
        """Expected length of the other queues if tasks were spread evenly."""
        active = ctx.workers - ctx.idle_workers
        if active <= 0:
            return 0.0
        return ctx.local_queue * ctx.idle_workers / active

    def __call__(self, ctx):
        return ctx.local_queue - self.estimate(ctx) < self.threshold

    def spec(self):
        return f"surplus:{self.threshold}"


class SubtreePredictor:
    """Exponential moving average of measured subtree times per depth."""

    def __init__(self, alpha=0.3):
        self.alpha = alpha
        self.samples = {}  # depth -> ema nanos; last writer wins

    def observe(self, depth, nanos):
        old = self.samples.get(depth)
        self.samples[depth] = nanos if old is None else old + self.alpha * (nanos - old)

    def predict(self, depth) -> float:
        return self.samples.get(depth, math.inf)


@dataclass
class ATC(Decider):
    """Max level and max tasks together, gated by predicted subtree time.

    By default a task is created only when its subtree is predicted to take
    longer than 1 ms (unknown depths spawn). ``invert`` flips the time test.
    """

    level: int = 12
    tasks: int | None = None
    invert: bool = False
    predictor: SubtreePredictor = field(default_factory=SubtreePredictor)
    name = "atc"

    def __call__(self, ctx):
        if not (MaxLevel(self.level)(ctx) and MaxTasks(self.tasks)(ctx)):
            return False
        predicted = self.predictor.predict(ctx.depth + 1)
        if math.isinf(predicted):
            return True
        large = predicted > INLINE_THRESHOLD_NS
        return not large if self.invert else large

    def observe(self, depth, nanos):
        self.predictor.observe(depth, nanos)

    def spec(self):
        tasks = "" if self.tasks is None else f",{self.tasks}"
        return f"atc:{self.level}{tasks}"


@dataclass
class MaxQueue(Decider):
    size: int | None = None  # None: two more than the worker count
    name = "maxqueue"

    def __call__(self, ctx):
        limit = self.size if self.size is not None else ctx.workers + 2
        return ctx.local_queue < limit

    def spec(self):
        return "maxqueue" if self.size is None else f"maxqueue:{self.size}"


@dataclass
class StackSize(Decider):
    depth: int = 64
    name = "stack"

    def __call__(self, ctx):
        return ctx.nesting < self.depth

    def spec(self):
        return f"stack:{self.depth}"


class SystemReadings:
    """CPU and memory occupation in [0, 1], resampled at most every 10 ms."""

    def __init__(self, max_age=0.010, clock=time.monotonic):
        self.max_age = max_age
        self.clock = clock
        self.taken = -math.inf
        self.cpu = 0.0
        self.mem = 0.0
        self._lock = threading.Lock()

    def read(self):
        now = self.clock()
        if now - self.taken >= self.max_age:
            with self._lock:
                if now - self.taken >= self.max_age:
                    self.cpu = psutil.cpu_percent(interval=None) / 100.0
                    self.mem = psutil.virtual_memory().percent / 100.0
                    self.taken = now
        return self.cpu, self.mem


@dataclass
class SystemMonitor(Decider):
    cpu_max: float = 0.9
    mem_max: float = 0.9
    name = "sysmon"
    uses_system = True

    def __call__(self, ctx):
        return ctx.cpu < self.cpu_max and ctx.mem < self.mem_max

    def spec(self):
        return f"sysmon:{self.cpu_max},{self.mem_max}"


@dataclass
class Combine(Decider):
    members: list = field(default_factory=list)
    name = "combo"

    @property
    def uses_system(self):
        return any(m.uses_system for m in self.members)

    def __call__(self, ctx):
        return all(m(ctx) for m in self.members)

    def observe(self, depth, nanos):
        for m in self.members:
            m.observe(depth, nanos)

    def spec(self):
        return "combo:" + "+".join(m.spec() for m in self.members)


DEFAULT = "surplus:3"


def _ints(args, n, name):
    if len(args) > n:
        raise ValueError(f"{name} takes at most {n} parameter(s)")
    return [int(a) for a in args]


def parse_decider(text: str, atc_invert: bool = False) -> Decider:
    """Build a decider from ``name[:p1,p2]``; ``combo:a+b`` joins several."""
    text = text.strip()
    name, _, rest = text.partition(":")
    name = name.lower()
    if name == "combo":
        if not rest:
            raise ValueError("combo needs at least one member")
        return Combine([parse_decider(part, atc_invert) for part in rest.split("+")])
    args = [a for a in rest.split(",") if a] if rest else []
    if name == "maxlevel":
        return MaxLevel(*_ints(args, 1, name))
    if name == "maxtasks":
        return MaxTasks(*_ints(args, 1, name))
    if name == "load":
        _ints(args, 0, name)
        return LoadBased()
    if name == "surplus":
        return Surplus(*_ints(args, 1, name))
    if name == "atc":
        vals = _ints(args, 2, name)
        return ATC(*vals, invert=atc_invert)
    if name == "maxqueue":
        return MaxQueue(*_ints(args, 1, name))
    if name == "stack":
        return StackSize(*_ints(args, 1, name))
    if name == "sysmon":
        if len(args) > 2:
            raise ValueError("sysmon takes at most 2 parameters")
        return SystemMonitor(*[float(a) for a in args])
    if name in ("always", "never"):
        return Always(name == "always")
    if name == "coin":
        vals = [float(args[0])] if args else []
        if len(args) > 1:
            vals.append(int(args[1]))
        return Coin(*vals)
    raise ValueError(f"unknown decider {text!r}")
