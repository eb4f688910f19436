"""Switched first-order load models and their exact ZOH discretization.

Each load follows ``alpha * dp/dt + p = target`` where the time constant
and the target depend on the binary command ``w``: ``(tau_on, rated_power)``
when on and ``(tau_off, p_off)`` when off.  Holding ``w`` constant over a
sample of length ``dt`` gives the exact recursion

    p[k] = b_on + a_on * p[k-1]                      (w = 1)
    p[k] = p_off + a_off * (p[k-1] - p_off)          (w = 0)

with ``a = exp(-dt / tau)`` and ``b_on = rated_power * (1 - a_on)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonDivisibleDwell, NonPositiveParameter

DWELL_ROUNDING = ("exact", "ceil")


@dataclass(frozen=True)
class LoadSpec:
    """Physical parameters of one switchable load.

    Times are in seconds.  Powers share the fleet-wide unit (fraction of the
    plant nominal power, or watts).
    """

    id: str
    rated_power: float
    tau_on: float
    tau_off: float
    min_on: float
    min_off: float
    p_off: float = 0.0

    def __post_init__(self):
        for name in ("rated_power", "tau_on", "tau_off", "min_on", "min_off"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise NonPositiveParameter(f"load {self.id!r}: {name} must be > 0, got {value!r}")
        if not (0 <= self.p_off < self.rated_power):
            raise NonPositiveParameter(
                f"load {self.id!r}: p_off must satisfy 0 <= p_off < rated_power, got {self.p_off!r}"
            )


def dwell_samples(duration: float, interval: float, rounding: str = "exact") -> int:
    """Number of ``interval``-long samples covering a minimum dwell ``duration``.

    ``rounding="exact"`` requires an integer multiple; ``"ceil"`` rounds up,
    which never shortens the physical minimum on/off time.
    """
    if rounding not in DWELL_ROUNDING:
        raise ValueError(f"rounding must be one of {DWELL_ROUNDING}, got {rounding!r}")
    if interval <= 0:
        raise NonPositiveParameter(f"sample interval must be > 0, got {interval!r}")
    # Fraction keeps 510/30 exact where float division might not.
    ratio = Fraction(duration).limit_denominator(10**9) / Fraction(interval).limit_denominator(10**9)
    if ratio.denominator == 1:
        return int(ratio)
    if rounding == "exact":
        raise NonDivisibleDwell(f"dwell {duration} s is not a multiple of {interval} s")
    return math.ceil(ratio)


@dataclass(frozen=True)
class DiscretizedLoad:
    spec: LoadSpec
    dt: float
    a_on: float
    b_on: float
    a_off: float
    b_off: float
    n_on: int
    n_off: int

    @property
    def rated_power(self) -> float:
        return self.spec.rated_power

    @property
    def p_off(self) -> float:
        return self.spec.p_off

    def advance(self, power: float, w: int) -> float:
        """One ZOH step of the power recursion."""
        if w:
            return self.b_on + self.a_on * power
        return self.spec.p_off + self.a_off * (power - self.spec.p_off)


def discretize(spec: LoadSpec, dt: float, dwell_rounding: str = "exact") -> DiscretizedLoad:
    if not (dt > 0 and math.isfinite(dt)):
        raise NonPositiveParameter(f"dt must be > 0, got {dt!r}")
    a_on = math.exp(-dt / spec.tau_on)
    a_off = math.exp(-dt / spec.tau_off)
    return DiscretizedLoad(
        spec=spec,
        dt=float(dt),
        a_on=a_on,
        b_on=spec.rated_power * (1.0 - a_on),
        a_off=a_off,
        b_off=spec.rated_power * (1.0 - a_off),
        n_on=dwell_samples(spec.min_on, dt, dwell_rounding),
        n_off=dwell_samples(spec.min_off, dt, dwell_rounding),
    )


@dataclass(frozen=True)
class LoadState:
    """Power, latched command and dwell of one load.

    ``dwell`` counts completed samples spent under the current command.  A
    step that keeps the command adds one; a step that switches it starts the
    new run, so after that step ``dwell == 1``.  A state built with
    ``dwell=0`` describes a switch taking effect right now.
    """

    power: float = 0.0
    on: bool = False
    dwell: int = 0


@dataclass(frozen=True)
class FleetState:
    loads: tuple[LoadState, ...] = field(default_factory=tuple)

    def __len__(self):
        return len(self.loads)

    @property
    def powers(self) -> np.ndarray:
        return np.array([s.power for s in self.loads], dtype=float)

    @property
    def commands(self) -> np.ndarray:
        return np.array([int(s.on) for s in self.loads], dtype=np.uint8)

    @classmethod
    def all_off(cls, loads: Sequence[DiscretizedLoad], dwell: int | None = None) -> "FleetState":
        """Every load off at its standby power, free to switch on immediately."""
        if dwell is None:
            dwell = max((ld.n_off for ld in loads), default=0)
        return cls(tuple(LoadState(ld.p_off, False, dwell) for ld in loads))


def step(load: DiscretizedLoad, state: LoadState, w: int) -> LoadState:
    w = 1 if w else 0
    power = load.advance(state.power, w)
    if bool(w) == state.on:
        return replace(state, power=power, dwell=state.dwell + 1)
    return LoadState(power=power, on=bool(w), dwell=1)


@dataclass
class FleetRun:
    demand: np.ndarray
    per_load: np.ndarray
    final: FleetState


def simulate_fleet(loads: Sequence[DiscretizedLoad], schedule, init: FleetState, hold: int = 1) -> FleetRun:
    """Apply ``schedule`` (n x H binary) to the fleet.

    Each column is held for ``hold`` simulation steps, so the output has
    ``H * hold`` samples, starting one step after ``init``.
    """
    bits = np.asarray(schedule)
    if bits.ndim != 2 or bits.shape[0] != len(loads) or len(init) != len(loads):
        raise DimensionMismatch(
            f"schedule shape {bits.shape} does not match fleet of {len(loads)} loads "
            f"(initial state has {len(init)})"
        )
    if hold < 1:
        raise DimensionMismatch(f"hold must be >= 1, got {hold}")
    n, horizon = bits.shape
    per_load = np.empty((n, horizon * hold))
    final = []
    for i, (load, state) in enumerate(zip(loads, init.loads)):
        for col in range(horizon):
            w = int(bits[i, col])
            for sub in range(hold):
                state = step(load, state, w)
                per_load[i, col * hold + sub] = state.power
        final.append(state)
    demand = np.zeros(horizon * hold)
    for i in range(n):
        demand = demand + per_load[i]
    return FleetRun(demand=demand, per_load=per_load, final=FleetState(tuple(final)))


def analytic_response(spec: LoadSpec, p0: float, commands: Sequence[int], seg_duration: float, times) -> np.ndarray:
    """Continuous-time solution for piecewise-constant commands.

    ``commands[j]`` is held over ``[j * seg_duration, (j + 1) * seg_duration)``;
    returns ``p(t)`` at each requested time.
    """
    times = np.asarray(times, dtype=float)
    out = np.empty_like(times)
    boundaries = [p0]
    p = p0
    for w in commands:
        target, tau = (spec.rated_power, spec.tau_on) if w else (spec.p_off, spec.tau_off)
        p = target + (p - target) * math.exp(-seg_duration / tau)
        boundaries.append(p)
    for idx, t in enumerate(times):
        j = min(int(t // seg_duration), len(commands) - 1)
        local = t - j * seg_duration
        if local == 0.0:
            # on a boundary; the general formula would cancel when p is tiny
            out[idx] = boundaries[j]
            continue
        w = commands[j]
        target, tau = (spec.rated_power, spec.tau_on) if w else (spec.p_off, spec.tau_off)
        out[idx] = target + (boundaries[j] - target) * math.exp(-local / tau)
    return out


def table_one() -> list[LoadSpec]:
    """The three reference loads (sizes as fractions of nominal plant power)."""
    return [
        LoadSpec("L1", 0.60, 120.0, 45.0, 600.0, 450.0),
        LoadSpec("L2", 0.26, 45.0, 30.0, 510.0, 300.0),
        LoadSpec("L3", 0.12, 15.0, 15.0, 450.0, 240.0),
    ]
