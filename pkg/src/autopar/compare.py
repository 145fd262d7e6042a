"""Compare program outputs: integers exactly, floats within a relative tolerance."""

from __future__ import annotations

import math
import re

_INT = re.compile(r"[-+]?\d+")
REL_TOL = 1e-9


def _parse(token):
    if _INT.fullmatch(token):
        return int(token)
    try:
        return float(token)
    except ValueError:
        return token


def values_match(a, b, rel=REL_TOL) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)
    return a == b


def lines_match(expected: str, actual: str, rel=REL_TOL) -> bool:
    left, right = expected.split(), actual.split()
    return len(left) == len(right) and all(
        values_match(_parse(x), _parse(y), rel) for x, y in zip(left, right)
    )


def outputs_match(expected, actual, rel=REL_TOL) -> bool:
    """Line-by-line comparison of two printed outputs (lists of lines)."""
    return len(expected) == len(actual) and all(
        lines_match(e, a, rel) for e, a in zip(expected, actual)
    )


def first_difference(expected, actual, rel=REL_TOL):
    for i, (e, a) in enumerate(zip(expected, actual)):
        if not lines_match(e, a, rel):
            return i, e, a
    if len(expected) != len(actual):
        i = min(len(expected), len(actual))
        return i, expected[i] if i < len(expected) else None, actual[i] if i < len(actual) else None
    return None
