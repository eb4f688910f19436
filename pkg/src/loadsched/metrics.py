"""Power exceedance, energy exceedance, efficiency and storage estimates."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import GridMismatch, ZeroSolarEnergy
from .loads import LoadSpec
from .series import PowerSeries, format_number


@dataclass(frozen=True)
class ExceedanceEvent:
    start: float
    end: float
    peak_pe: float
    ee: float
    steps: int


@dataclass(frozen=True)
class ExceedanceReport:
    events: tuple[ExceedanceEvent, ...] = field(default_factory=tuple)
    total_ee: float = 0.0
    violation_steps: int = 0
    max_event_ee: float = 0.0

    @property
    def event_count(self) -> int:
        return len(self.events)


def power_exceedance(actual: PowerSeries, demand: PowerSeries) -> np.ndarray:
    actual.require_same_grid(demand)
    if len(actual) != len(demand) or actual.index_of(demand.t0) != 0:
        raise GridMismatch("actual and demand must cover the same samples")
    return np.maximum(0.0, demand.values - actual.values)


def exceedance(actual: PowerSeries, demand: PowerSeries, tol: float = 0.0) -> ExceedanceReport:
    """Segment samples with ``PE > tol`` into maximal runs.

    Energy is integrated with the rectangle rule, ``PE * dt`` per sample.
    """
    pe = power_exceedance(actual, demand)
    dt = actual.dt
    times = actual.times
    events = []
    violated = pe > tol
    j = 0
    while j < len(pe):
        if not violated[j]:
            j += 1
            continue
        k = j
        while k < len(pe) and violated[k]:
            k += 1
        run = pe[j:k]
        events.append(ExceedanceEvent(
            start=float(times[j]),
            end=float(times[k - 1]),
            peak_pe=float(run.max()),
            ee=float(np.sum(run) * dt),
            steps=k - j,
        ))
        j = k
    total = 0.0
    for ev in events:
        total += ev.ee
    return ExceedanceReport(
        events=tuple(events),
        total_ee=total,
        violation_steps=sum(ev.steps for ev in events),
        max_event_ee=max((ev.ee for ev in events), default=0.0),
    )


def efficiency(actual: PowerSeries, demand: PowerSeries) -> float:
    """Share of available energy actually served to the loads."""
    power_exceedance(actual, demand)
    supplied = float(np.sum(actual.values)) * actual.dt
    if supplied <= 0:
        raise ZeroSolarEnergy("no available energy over the evaluated span")
    served = float(np.sum(np.minimum(demand.values, actual.values))) * actual.dt
    return served / supplied


@dataclass(frozen=True)
class BatteryEstimate:
    max_event_ee: float
    largest_unit_rule: float


def battery_estimate(report: ExceedanceReport, loads: Sequence[LoadSpec]) -> BatteryEstimate:
    """Two point estimates of storage energy (power unit times seconds).

    ``largest_unit_rule`` rides the largest unit through one full minimum
    on-time: ``rated_power * min_on`` of the load with the largest rating.
    """
    largest = max(loads, key=lambda s: s.rated_power) if loads else None
    rule = largest.rated_power * largest.min_on if largest else 0.0
    return BatteryEstimate(max_event_ee=report.max_event_ee, largest_unit_rule=rule)


def write_events_csv(report: ExceedanceReport, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["event_start", "event_end", "peak_pe", "ee"])
        for ev in report.events:
            writer.writerow([format_number(ev.start), format_number(ev.end),
                             format_number(ev.peak_pe), format_number(ev.ee)])
