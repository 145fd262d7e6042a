"""Run deeply recursive interpreter code on a thread with a large stack."""

from __future__ import annotations

import sys
import threading

STACK_BYTES = 512 * 1024 * 1024
RECURSION_LIMIT = 200_000


def raise_limits():
    if sys.getrecursionlimit() < RECURSION_LIMIT:
        sys.setrecursionlimit(RECURSION_LIMIT)


def big_stack_thread(target, name=None, daemon=True) -> threading.Thread:
    raise_limits()
    old = threading.stack_size()
    threading.stack_size(STACK_BYTES)
    try:
        t = threading.Thread(target=target, name=name, daemon=daemon)
        t.start()
    finally:
        threading.stack_size(old)
    return t


def call_with_big_stack(fn, *args, **kwargs):
    box = {}

    def run():
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc

    big_stack_thread(run).join()
    if "error" in box:
        raise box["error"]
    return box["value"]
