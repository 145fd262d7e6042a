"""Work-stealing worker pool with dependency tracking and help-first waits."""

from __future__ import annotations

import itertools
import os
import random
import threading
import time
from collections import deque

from autopar.deciders import DecisionContext, Surplus, SystemReadings
from autopar.profiler import Profiler
from autopar.runtime import splitting
from autopar.runtime.blocking import BlockingPool
from autopar.runtime.splitting import SplitConfig
from autopar.runtime.task import (
    ATOMIC, BLOCKING, NONBLOCKING, CycleError, Future, State, Task,
)
from autopar.stack import big_stack_thread, raise_limits

STEAL_POLICIES = ("random", "largest", "dependents")
SLEEP_TIMEOUT = 0.05  # safety net only; wakeups are signalled


def default_workers() -> int:
    return os.cpu_count() or 1


class Runtime:
    """A fixed set of workers, each owning one deque.

    Owners push and pop at the right end, thieves take from the left.
    Submissions from threads outside the pool go to an injection queue.
    """

    def __init__(self, workers=None, steal="random", decider=None, split=None, seed=0,
                 profile=True, track_history=False, keep_alive=None):
        if steal not in STEAL_POLICIES:
            raise ValueError(f"unknown steal policy {steal!r}")
        self.n = workers if workers is not None else default_workers()
        if self.n < 1:
            raise ValueError("need at least one worker")
        self.steal_policy = steal
        self.decider = decider if decider is not None else Surplus(3)
        self.split = split if split is not None else SplitConfig()
        self.seed = seed
        self.profiler = Profiler(profile)
        self.track_history = track_history
        self.queues = [deque() for _ in range(self.n)]
        self.injection = deque()
        self.cv = threading.Condition()
        self.sleepers = 0
        self.stopping = False
        self.threads = []
        self.ids = itertools.count(1)
        self._counts = threading.Lock()
        self.active = 0
        self.busy = 0
        self._atomic = threading.Lock()
        self._held = {}  # datagroup -> holding task
        self._atomic_waiting = {}  # datagroup -> [parked tasks]
        self._tls = threading.local()
        self._system = SystemReadings()
        self.blocking = BlockingPool(self._execute, **({"keep_alive": keep_alive} if keep_alive else {}))
        self.wall_time_nanos = 0

    # lifecycle

    def start(self):
        if self.threads:
            return self
        raise_limits()
        for w in range(self.n):
            self.threads.append(big_stack_thread(lambda w=w: self._worker(w), name=f"worker-{w}"))
        return self

    def shutdown(self):
        with self.cv:
            self.stopping = True
            self.cv.notify_all()
        for t in self.threads:
            t.join()
        self.blocking.shutdown()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()

    def quiescent(self) -> bool:
        return self.active == 0 and not self.injection and not any(self.queues)

    # thread-local state

    def _local(self):
        tls = self._tls
        if not hasattr(tls, "worker"):
            tls.worker = -1
            tls.current = None
            tls.nesting = 0
            tls.rng = None
        return tls

    @property
    def current_task(self):
        return self._local().current

    # decisions

    def context(self) -> DecisionContext:
        tls = self._local()
        cur = tls.current
        w = tls.worker
        local = len(self.queues[w]) if w >= 0 else len(self.injection)
        ctx = DecisionContext(
            depth=cur.depth if cur is not None else 0,
            active_tasks=max(self.active, 0),
            local_queue=local,
            queue_lengths=tuple(len(q) for q in self.queues),
            idle_workers=max(self.n - self.busy, 0),
            workers=self.n,
            nesting=tls.nesting,
        )
        if self.decider.uses_system:
            ctx.cpu, ctx.mem = self._system.read()
        return ctx

    def should_create(self) -> bool:
        self.profiler.consulted()
        return self.decider(self.context())

    def should_seq(self) -> bool:
        return not self.should_create()

    # submission

    def submit(self, body, deps=(), kind=NONBLOCKING, groups=(), hints=(), name=None) -> Future:
        """Create a task unconditionally. ``deps`` are futures or tasks."""
        parent = self._local().current
        tid = next(self.ids)
        dep_tasks = []
        for d in deps:
            t = d.task if isinstance(d, Future) else d
            if t is None:
                continue
            # ids grow with creation, so a dependency can never be newer than its dependent
            if t.id >= tid:
                raise CycleError(f"task {tid} would depend on task {t.id}, which is not older")
            dep_tasks.append(t)
        task = Task(tid, body, (), parent, kind, groups, hints, name, self.track_history)
        task.created = time.perf_counter_ns()
        with self._counts:
            self.active += 1
        if parent is not None:
            with parent.lock:
                parent.children += 1
        self.profiler.created()
        task.deps = tuple(dep_tasks)
        task.unmet = 1  # held until registration finishes
        parked = False
        for t in dep_tasks:
            with t.lock:
                if t.state != State.COMPLETED:
                    t.dependents.append(task)
                    with task.lock:
                        task.unmet += 1
                        if not parked:
                            task.move(State.WAITING_DEPS)
                            parked = True
        if parked:
            self.profiler.parked()
        self._dep_met(task)
        return Future(task, self)

    def spawn(self, body, deps=(), kind=NONBLOCKING, groups=(), hints=(), name=None) -> Future:
        """Ask the decider; create a task or run ``body`` right here.

        Blocking and atomic work is always handed to the runtime.
        """
        if kind != NONBLOCKING or self.should_create():
            return self.submit(body, deps, kind, groups, hints, name)
        self.profiler.inlined()
        for d in deps:
            t = d.task if isinstance(d, Future) else d
            if t is not None:
                self._join(t)
        tls = self._local()
        tls.nesting += 1
        try:
            return Future.completed(body())
        except Exception as exc:
            return Future.failed(exc)
        finally:
            tls.nesting -= 1

    def _dep_met(self, task):
        with task.lock:
            task.unmet -= 1
            if task.unmet:
                return
            task.move(State.READY)
        self._enqueue(task)

    def _enqueue(self, task):
        if task.kind == BLOCKING:
            self.blocking.submit(task)
            return
        w = self._local().worker
        if w >= 0:
            q = self.queues[w]
            q.append(task)
            self.profiler.queue_length(len(q))
        else:
            self.injection.append(task)
        if self.sleepers:
            with self.cv:
                self.cv.notify_all()

    # execution

    def _execute(self, task):
        if task.kind == ATOMIC and not self._acquire(task):
            return
        tls = self._local()
        outer = tls.current
        tls.current = task
        worker = tls.worker >= 0
        if worker:
            with self._counts:
                self.busy += 1
        with task.lock:
            task.move(State.RUNNING)
        task.started = time.perf_counter_ns()
        self.profiler.executed()
        try:
            task.result = task.body()
        except Exception as exc:
            task.error = exc
        finally:
            tls.current = outer
            if worker:
                with self._counts:
                    self.busy -= 1
            if task.kind == ATOMIC:
                self._release(task)
        self._body_done(task)

    def _body_done(self, task):
        with task.lock:
            task.body_done = True
            task.body = None
            if task.children:
                task.move(State.WAITING_CHILDREN)
                return
        self._complete(task)

    def _complete(self, task):
        while task is not None:
            with task.lock:
                task.move(State.COMPLETED)
                task.finished = time.perf_counter_ns()
                dependents, task.dependents = task.dependents, ()
            for d in dependents:
                self._dep_met(d)
            with self._counts:
                self.active -= 1
            self.decider.observe(task.depth, task.finished - task.started)
            if self.sleepers:
                with self.cv:
                    self.cv.notify_all()
            parent = task.parent
            if parent is None:
                return
            with parent.lock:
                parent.children -= 1
                if parent.children or not parent.body_done:
                    return
            task = parent

    # atomic datagroups: all-or-nothing acquisition in sorted order, parking on conflict

    def _acquire(self, task) -> bool:
        with self._atomic:
            for g in task.groups:
                if g in self._held:
                    self._atomic_waiting.setdefault(g, []).append(task)
                    return False
            for g in task.groups:
                self._held[g] = task
        return True

    def _release(self, task):
        woken = []
        with self._atomic:
            for g in task.groups:
                del self._held[g]
                woken.extend(self._atomic_waiting.pop(g, ()))
        for t in woken:
            self._enqueue(t)

    # finding work

    def _worker(self, w):
        tls = self._local()
        tls.worker = w
        tls.rng = random.Random(self.seed * 7919 + w)
        self.profiler.counters(w)
        while not self.stopping:
            task = self._find_work(w)
            if task is not None:
                self._execute(task)
            else:
                self._sleep(lambda: self.stopping, look_for_work=True)

    def _find_work(self, w):
        try:
            return self.queues[w].pop()
        except IndexError:
            pass
        try:
            return self.injection.popleft()
        except IndexError:
            pass
        if self.n > 1:
            return self._steal(w)
        return None

    def _victims(self, w):
        return [v for v in range(self.n) if v != w and self.queues[v]]

    def _steal(self, w):
        victims = self._victims(w)
        if not victims:
            return None
        policy = self.steal_policy
        if policy == "random":
            order = victims[:]
            self._local().rng.shuffle(order)
        elif policy == "largest":
            order = sorted(victims, key=lambda v: -len(self.queues[v]))
        else:
            order = sorted(victims, key=lambda v: -self._thief_end_dependents(v))
        for v in order:
            try:
                task = self.queues[v].popleft()
            except IndexError:
                continue
            self.profiler.stole(policy)
            return task
        return None

    def _thief_end_dependents(self, v):
        try:
            return len(self.queues[v][0].dependents)
        except (IndexError, TypeError):
            return 0

    def _has_work(self):
        return bool(self.injection) or any(self.queues)

    def _sleep(self, done, look_for_work):
        with self.cv:
            self.sleepers += 1
            try:
                if not done() and not (look_for_work and self._has_work()):
                    self.cv.wait(SLEEP_TIMEOUT)
            finally:
                self.sleepers -= 1

    # waiting

    def _join(self, task):
        """Block until ``task`` completes; workers run other ready tasks meanwhile."""
        if task.state == State.COMPLETED:
            return
        tls = self._local()
        w = tls.worker
        if w < 0:
            while task.state != State.COMPLETED:
                self._sleep(lambda: task.state == State.COMPLETED, look_for_work=False)
            return
        while task.state != State.COMPLETED:
            other = self._find_work(w)
            if other is None:
                self._sleep(lambda: task.state == State.COMPLETED, look_for_work=True)
                continue
            tls.nesting += 1
            try:
                self._execute(other)
            finally:
                tls.nesting -= 1

    def wait(self, future):
        task = future.task
        self._join(task)
        if task.error is not None:
            raise task.error
        return task.result

    # entry points

    def run(self, fn, *args):
        """Run ``fn(*args)`` as the root task and return its value."""
        self.start()
        t0 = time.perf_counter_ns()
        try:
            return self.submit(lambda: fn(*args), name="root").get()
        finally:
            self.wall_time_nanos = time.perf_counter_ns() - t0

    def parallel_for(self, start, stop, body, split=None, local=None):
        return splitting.parallel_for(self, start, stop, body, split, local)

    def map_reduce(self, start, stop, body, reducers, split=None, local=None, extract=None):
        return splitting.map_reduce(self, start, stop, body, reducers, split, local, extract)

    def stats(self, config=None):
        return self.profiler.stats(self.n, self.wall_time_nanos, config)
