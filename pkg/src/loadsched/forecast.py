"""Power-availability forecasts: perfect, persistence and ingested windows."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import CoverageGap, EmptySet, InvalidProfile, NonUniformGrid, ParseError, ZeroNormalizer
from .series import GRID_RTOL, PowerSeries, format_number, parse_timestamp

KT_GUARD_FRACTION = 0.01


class Shape(str, enum.Enum):
    HALF_SINE = "half_sine"


@dataclass(frozen=True)
class ClearSkyProfile:
    p_peak: float
    t_rise: float
    t_set: float
    shape: Shape = Shape.HALF_SINE

    def __post_init__(self):
        if not (self.p_peak > 0 and math.isfinite(self.p_peak)):
            raise InvalidProfile(f"p_peak must be > 0, got {self.p_peak!r}")
        if not self.t_rise < self.t_set:
            raise InvalidProfile(f"t_rise ({self.t_rise}) must precede t_set ({self.t_set})")
        object.__setattr__(self, "shape", Shape(self.shape))

    @property
    def noon(self) -> float:
        return 0.5 * (self.t_rise + self.t_set)

    def value(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        fraction = (t - self.t_rise) / (self.t_set - self.t_rise)
        inside = (fraction >= 0.0) & (fraction <= 1.0)
        return np.where(inside, np.clip(self.p_peak * np.sin(np.pi * fraction), 0.0, None), 0.0)


def clear_sky(profile: ClearSkyProfile, t0: float, dt: float, count: int) -> PowerSeries:
    if count < 1:
        raise InvalidProfile(f"count must be >= 1, got {count}")
    times = t0 + dt * np.arange(count)
    return PowerSeries(t0, dt, profile.value(times))


def apply_cloud(series: PowerSeries, steps) -> PowerSeries:
    """Scale samples with ``start <= t < end`` by ``factor`` for each step.

    Overlapping steps multiply.
    """
    values = np.array(series.values)
    times = series.times
    for start, end, factor in steps:
        values[(times >= start) & (times < end)] *= factor
    return PowerSeries(series.t0, series.dt, values)


def perfect_forecast(actual: PowerSeries, issue: float, horizon: int) -> PowerSeries:
    return actual.window(issue + actual.dt, horizon)


def persistence_forecast(measured: PowerSeries, clearsky: PowerSeries, issue: float, horizon: int,
                         eps: float | None = None) -> PowerSeries:
    """Hold the clear-sky index observed at ``issue`` over the next ``horizon`` samples.

    ``eps`` defaults to 1% of the clear-sky peak; below it the index is 0.
    """
    measured.require_same_grid(clearsky)
    if eps is None:
        eps = KT_GUARD_FRACTION * float(np.max(clearsky.values))
    reference = clearsky.at(issue)
    kt = measured.at(issue) / reference if reference > eps else 0.0
    future = clearsky.window(issue + clearsky.dt, horizon)
    return PowerSeries(future.t0, future.dt, np.clip(kt * future.values, 0.0, None))


class ForecastSet(Mapping):
    """Read-only map from issue time to the forecast window issued then."""

    def __init__(self, windows: Mapping[float, PowerSeries], dt: float):
        self.dt = float(dt)
        self._windows = {float(k): v for k, v in sorted(windows.items())}
        for issue, window in self._windows.items():
            if not math.isclose(window.dt, self.dt, rel_tol=GRID_RTOL):
                raise NonUniformGrid(f"window issued at {issue} has dt={window.dt}, expected {self.dt}")
            if not math.isclose(window.t0, issue + self.dt, rel_tol=0, abs_tol=1e-6):
                raise NonUniformGrid(f"window issued at {issue} starts at {window.t0}, not issue + dt")

    def __getitem__(self, issue):
        return self._windows[float(issue)]

    def __iter__(self):
        return iter(self._windows)

    def __len__(self):
        return len(self._windows)

    def window(self, issue: float, horizon: int) -> PowerSeries:
        window = self._windows.get(float(issue))
        if window is None:
            raise CoverageGap(f"no forecast issued at {issue}")
        if len(window) < horizon:
            raise CoverageGap(f"forecast issued at {issue} has {len(window)} samples, need {horizon}")
        return PowerSeries(window.t0, window.dt, window.values[:horizon])

    def require(self, issues: Iterable[float], horizon: int):
        for issue in issues:
            self.window(issue, horizon)

    @classmethod
    def from_function(cls, issues: Iterable[float], make_window) -> "ForecastSet":
        windows = {float(t): make_window(t) for t in issues}
        if not windows:
            raise EmptySet("no issue times")
        return cls(windows, next(iter(windows.values())).dt)


def load_forecast_set(path, horizon: int | None = None, issues: Iterable[float] | None = None) -> ForecastSet:
    """Read a long ``issue_time,target_time,power`` CSV.

    Missing horizon samples are a :class:`CoverageGap`; nothing is
    interpolated.
    """
    path = Path(path)
    grouped: dict[float, dict[float, float]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["issue_time", "target_time", "power"]:
            raise ParseError(f"{path}: expected header 'issue_time,target_time,power', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            issue, target = parse_timestamp(row[0]), parse_timestamp(row[1])
            try:
                power = float(row[2])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad power value {row[2]!r}") from exc
            if not math.isfinite(power) or power < 0:
                raise ParseError(f"{path}:{lineno}: power must be finite and >= 0")
            targets = grouped.setdefault(issue, {})
            if target in targets:
                raise ParseError(f"{path}:{lineno}: duplicate row for issue {row[0]}, target {row[1]}")
            targets[target] = power
    if not grouped:
        raise ParseError(f"{path}: no forecast rows")

    dt = None
    windows = {}
    for issue, targets in sorted(grouped.items()):
        times = np.array(sorted(targets))
        if len(times) >= 2:
            steps = np.diff(times)
            if dt is None:
                dt = float(steps[0])
            if not np.allclose(steps, dt, rtol=GRID_RTOL, atol=1e-6):
                raise NonUniformGrid(f"{path}: targets for issue {issue} are not spaced by {dt}")
        first_step = times[0] - issue
        if dt is None:
            dt = float(first_step)
        if dt <= 0 or not math.isclose(first_step, dt, rel_tol=0, abs_tol=1e-6):
            raise NonUniformGrid(f"{path}: first target for issue {issue} is not issue + dt")
        windows[issue] = PowerSeries(times[0], dt, np.array([targets[t] for t in times]))
    fset = ForecastSet(windows, dt)
    if horizon is not None:
        fset.require(issues if issues is not None else fset.keys(), horizon)
    return fset


def write_forecast_set(fset: ForecastSet, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["issue_time", "target_time", "power"])
        for issue, window in fset.items():
            for t, v in zip(window.times, window.values):
                writer.writerow([format_number(issue), format_number(t), format_number(v)])


@dataclass(frozen=True)
class ForecastErrors:
    rRMSE: float
    rMBE: float
    rMAE: float


def forecast_errors(fset: ForecastSet, actual: PowerSeries) -> ForecastErrors:
    """Pooled relative error statistics, in percent.

    Errors pool every (issue, lead) pair; the normalizer is the mean actual
    power over the daytime (actual > 0) forecast targets.
    """
    if len(fset) == 0:
        raise EmptySet("forecast set is empty")
    errors, truths = [], []
    for window in fset.values():
        truth = actual.window(window.t0, len(window)).values
        errors.append(window.values - truth)
        truths.append(truth)
    err = np.concatenate(errors)
    truth = np.concatenate(truths)
    if err.size == 0:
        raise EmptySet("forecast set has no samples")
    daytime = truth[truth > 0]
    if daytime.size == 0:
        raise ZeroNormalizer("mean actual power over forecast targets is zero")
    rel = err / float(np.mean(daytime))
    # scale before squaring so tiny errors do not underflow to a zero RMSE
    scale = float(np.max(np.abs(rel)))
    rms = scale * math.sqrt(float(np.mean((rel / scale) ** 2))) if scale > 0 else 0.0
    return ForecastErrors(
        rRMSE=100.0 * rms,
        rMBE=100.0 * float(np.mean(rel)),
        rMAE=100.0 * float(np.mean(np.abs(rel))),
    )
