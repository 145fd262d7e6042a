"""Implementations of the language's builtin functions and arithmetic."""

from __future__ import annotations

import math
import time

import numpy as np

from autopar.errors import MplRuntimeError


def format_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def int_div(a, b):
    if b == 0:
        raise MplRuntimeError("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def int_mod(a, b):
    if b == 0:
        raise MplRuntimeError("division by zero")
    return a - b * int_div(a, b)


def float_div(a, b):
    if b == 0:
        raise MplRuntimeError("division by zero")
    return a / b


def heavy_op(k):
    """CPU-bound kernel whose cost grows linearly with ``k``."""
    if k <= 0:
        return 0.0
    x = np.arange(k, dtype=np.float64)
    return float(np.sqrt(x * x + 1.0).sum() % 1000.0)


def sleep_ms(ms):
    time.sleep(max(ms, 0) / 1000.0)


def _checked(fn):
    def wrapper(*args):
        try:
            return fn(*args)
        except (ValueError, OverflowError) as exc:
            raise MplRuntimeError(f"math error: {exc}") from None
    return wrapper


PURE = {
    "sqrt": _checked(math.sqrt),
    "sin": math.sin,
    "cos": math.cos,
    "exp": _checked(math.exp),
    "log": _checked(math.log),
    "fabs": math.fabs,
    "floor": lambda x: float(math.floor(x)),
    "pow": _checked(lambda a, b: float(math.pow(a, b))),
    "abs": abs,
    "min": min,
    "max": max,
    "toint": lambda x: int(x),
    "tofloat": float,
    "len": len,
    "heavy_op": heavy_op,
    "sleep_ms": sleep_ms,
}
