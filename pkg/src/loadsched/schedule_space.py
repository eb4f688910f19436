"""Admissible binary switching schedules under minimum dwell-time rules.

A row is one load's on/off commands over the horizon.  Runs of equal
commands must last at least ``n_on`` (ones) or ``n_off`` (zeros) samples.
The run touching the horizon start is credited with ``init.dwell`` samples
already spent in ``init.on``; the run touching the horizon end is governed
by the end rule:

* ``STRICT``: a load may only switch on if the full minimum on-time fits
  before the horizon ends.  Trailing off-runs may be cut by the horizon.
* ``EXTENDABLE``: trailing runs of any length are fine; the commitment
  carries past the horizon and is enforced by later dwell bookkeeping.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, NonPositiveParameter
from .loads import LoadState


class EndRule(str, enum.Enum):
    STRICT = "strict"
    EXTENDABLE = "extendable"

    @classmethod
    def parse(cls, value) -> "EndRule":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"end_rule must be one of {[r.value for r in cls]}, got {value!r}") from None


@dataclass(frozen=True)
class DwellConstraint:
    n_on: int
    n_off: int
    horizon: int
    end_rule: EndRule = EndRule.STRICT

    def __post_init__(self):
        for name in ("n_on", "n_off", "horizon"):
            if int(getattr(self, name)) < 1:
                raise NonPositiveParameter(f"{name} must be >= 1, got {getattr(self, name)!r}")
        object.__setattr__(self, "end_rule", EndRule.parse(self.end_rule))

    def need(self, value: int) -> int:
        return self.n_on if value else self.n_off


def _runs(row):
    start = 0
    for j in range(1, len(row) + 1):
        if j == len(row) or row[j] != row[start]:
            yield row[start], start, j - start
            start = j


def is_admissible(row, constraint: DwellConstraint, init: LoadState, first_step_fixed: bool = False) -> bool:
    row = [1 if b else 0 for b in row]
    horizon = constraint.horizon
    if len(row) != horizon:
        raise LengthMismatch(f"row length {len(row)} != horizon {horizon}")
    prev = 1 if init.on else 0
    if first_step_fixed and row[0] != prev:
        return False
    for value, start, length in _runs(row):
        leading = start == 0
        trailing = start + length == horizon
        if leading and value != prev and init.dwell < constraint.need(prev):
            return False
        if leading and value == prev:
            if not trailing and init.dwell + length < constraint.need(value):
                return False
            continue
        if trailing:
            if constraint.end_rule is EndRule.STRICT and value == 1 and length < constraint.n_on:
                return False
            continue
        if length < constraint.need(value):
            return False
    return True


def enumerate_rows(constraint: DwellConstraint, init: LoadState, first_step_fixed: bool = False) -> Iterator[tuple]:
    """Yield admissible rows in lexicographic order (0 before 1).

    Depth-first over run-length states; every surviving prefix extends to at
    least one admissible row, so the work is proportional to the output.
    """
    horizon = constraint.horizon
    strict = constraint.end_rule is EndRule.STRICT
    prev = 1 if init.on else 0
    prefix = [0] * horizon

    def may_switch(value, length, leading):
        credited = init.dwell + length if leading else length
        return credited >= constraint.need(value)

    def opens_ok(bit, j):
        return not (strict and bit == 1 and j + constraint.n_on > horizon)

    def walk(j, value, length, leading):
        if j == horizon:
            yield tuple(prefix)
            return
        for bit in (0, 1):
            if bit == value:
                prefix[j] = bit
                yield from walk(j + 1, value, length + 1, leading)
            elif may_switch(value, length, leading) and opens_ok(bit, j):
                prefix[j] = bit
                yield from walk(j + 1, bit, 1, False)

    if first_step_fixed:
        prefix[0] = prev
        yield from walk(1, prev, 1, True)
    else:
        yield from walk(0, prev, 0, True)


def count_admissible(constraint: DwellConstraint, init: LoadState, first_step_fixed: bool = False) -> int:
    """Count admissible rows by dynamic programming over run-length states."""
    horizon = constraint.horizon
    strict = constraint.end_rule is EndRule.STRICT
    cap = max(constraint.n_on, constraint.n_off)
    prev = 1 if init.on else 0
    # state: (value, credited run length capped at `cap`, leading flag)
    start_len = min(init.dwell, cap)
    states = {(prev, start_len, True): 1}
    first = 0
    if first_step_fixed:
        states = {(prev, min(init.dwell + 1, cap), True): 1}
        first = 1
    for j in range(first, horizon):
        nxt: dict = {}
        for (value, length, leading), ways in states.items():
            key = (value, min(length + 1, cap), leading)
            nxt[key] = nxt.get(key, 0) + ways
            bit = 1 - value
            if length >= constraint.need(value) and not (strict and bit == 1 and j + constraint.n_on > horizon):
                key = (bit, min(1, cap), False)
                nxt[key] = nxt.get(key, 0) + ways
        states = nxt
    return sum(states.values())


@lru_cache(maxsize=4096)
def _rows_cached(constraint: DwellConstraint, on: bool, dwell: int, first_step_fixed: bool) -> np.ndarray:
    rows = list(enumerate_rows(constraint, LoadState(0.0, on, dwell), first_step_fixed))
    out = np.array(rows, dtype=np.uint8).reshape(len(rows), constraint.horizon)
    out.setflags(write=False)
    return out


def admissible_rows(constraint: DwellConstraint, init: LoadState, first_step_fixed: bool = False) -> np.ndarray:
    """Admissible rows as a read-only ``(count, horizon)`` uint8 array (cached)."""
    # dwell beyond the largest minimum cannot change admissibility
    dwell = min(int(init.dwell), max(constraint.n_on, constraint.n_off))
    return _rows_cached(constraint, bool(init.on), dwell, bool(first_step_fixed))


def _check_fleet(constraints: Sequence, inits: Sequence):
    if len(constraints) != len(inits):
        raise DimensionMismatch(f"{len(constraints)} constraints but {len(inits)} initial states")
    horizons = {c.horizon for c in constraints}
    if len(horizons) > 1:
        raise DimensionMismatch(f"loads disagree on the horizon: {sorted(horizons)}")


def enumerate_fleet(constraints: Sequence[DwellConstraint], inits: Sequence[LoadState],
                    first_step_fixed: bool = False) -> Iterator[np.ndarray]:
    """Yield every n x N candidate, lexicographic with load 0 most significant."""
    _check_fleet(constraints, inits)
    per_load = [admissible_rows(c, s, first_step_fixed) for c, s in zip(constraints, inits)]
    for combo in itertools.product(*per_load):
        yield np.array(combo, dtype=np.uint8)


def count_fleet(constraints: Sequence[DwellConstraint], inits: Sequence[LoadState],
                first_step_fixed: bool = False) -> int:
    _check_fleet(constraints, inits)
    return math.prod(count_admissible(c, s, first_step_fixed) for c, s in zip(constraints, inits))


def counting_table(n_loads: int = 3, horizon: int = 6, dwell: int = 4) -> list[dict]:
    """Fleet sizes for the all-off, n-load example under every convention."""
    init = LoadState(0.0, False, dwell)
    table = []
    for rule in EndRule:
        for fixed in (False, True):
            c = DwellConstraint(dwell, dwell, horizon, rule)
            per_load = count_admissible(c, init, fixed)
            table.append({
                "end_rule": rule.value,
                "first_step_fixed": fixed,
                "per_load": per_load,
                "fleet": per_load ** n_loads,
                "unconstrained": (2 ** n_loads) ** (horizon - 1),
            })
    return table
