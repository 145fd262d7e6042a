"""Helper threads for tasks that may block, kept apart from the stealing workers."""

from __future__ import annotations

import threading
from collections import deque

from autopar.stack import big_stack_thread

KEEP_ALIVE = 1.0


class BlockingPool:
    """Grows a helper per waiting task; idle helpers retire after ``keep_alive``."""

    def __init__(self, run_task, keep_alive: float = KEEP_ALIVE):
        self.run_task = run_task
        self.keep_alive = keep_alive
        self.queue = deque()
        self.cv = threading.Condition()
        self.idle = 0
        self.threads = 0
        self.peak = 0
        self.closed = False

    def submit(self, task):
        with self.cv:
            if self.closed:
                raise RuntimeError("blocking pool is shut down")
            self.queue.append(task)
            if self.idle > len(self.queue) - 1:
                self.cv.notify()
                return
            self.threads += 1
            self.peak = max(self.peak, self.threads)
        big_stack_thread(self._helper, name="blocking-helper")

    def _helper(self):
        while True:
            with self.cv:
                while not self.queue:
                    if self.closed:
                        self.threads -= 1
                        return
                    self.idle += 1
                    woke = self.cv.wait(self.keep_alive)
                    self.idle -= 1
                    if not woke and not self.queue:
                        self.threads -= 1
                        return
                task = self.queue.popleft()
            self.run_task(task)

    def shutdown(self):
        with self.cv:
            self.closed = True
            self.cv.notify_all()
