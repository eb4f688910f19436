"""Uniformly sampled power series and their CSV form."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import GridMismatch, NonUniformGrid, OutOfRange, ParseError

GRID_RTOL = 1e-9


def parse_timestamp(text: str) -> float:
    """Integer/float seconds, or ISO-8601 (naive values are taken as UTC)."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"unreadable timestamp {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def format_number(value: float) -> str:
    value = float(value)
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return f"{value:.17g}"


@dataclass(frozen=True)
class PowerSeries:
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("power series must be one-dimensional")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise NonUniformGrid(f"dt must be positive, got {self.dt!r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("power series contains non-finite values")
        if np.any(values < 0):
            raise ValueError("power series contains negative values")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.values) - 1)

    def index_of(self, t: float) -> int:
        pos = (t - self.t0) / self.dt
        idx = round(pos)
        if abs(pos - idx) > 1e-6:
            raise GridMismatch(f"time {t} is not on the grid t0={self.t0}, dt={self.dt}")
        return int(idx)

    def at(self, t: float) -> float:
        idx = self.index_of(t)
        if not 0 <= idx < len(self.values):
            raise OutOfRange(f"time {t} outside [{self.t0}, {self.t_end}]")
        return float(self.values[idx])

    def window(self, start: float, count: int) -> "PowerSeries":
        """``count`` samples beginning at time ``start``."""
        idx = self.index_of(start)
        if idx < 0 or idx + count > len(self.values):
            raise OutOfRange(
                f"window [{start}, +{count} samples] outside series [{self.t0}, {self.t_end}]"
            )
        return PowerSeries(start, self.dt, self.values[idx: idx + count])

    def same_grid(self, other: "PowerSeries") -> bool:
        return math.isclose(self.dt, other.dt, rel_tol=GRID_RTOL) and math.isclose(
            (self.t0 - other.t0) / self.dt, round((self.t0 - other.t0) / self.dt), abs_tol=1e-6
        )

    def require_same_grid(self, other: "PowerSeries"):
        if not self.same_grid(other):
            raise GridMismatch(
                f"series grids differ: (t0={self.t0}, dt={self.dt}) vs (t0={other.t0}, dt={other.dt})"
            )


def read_power_csv(path) -> PowerSeries:
    """Read a ``timestamp,power`` file, enforcing uniform spacing."""
    path = Path(path)
    times, values = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["timestamp", "power"]:
            raise ParseError(f"{path}: expected header 'timestamp,power', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            times.append(parse_timestamp(row[0]))
            try:
                values.append(float(row[1]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad power value {row[1]!r}") from exc
    if len(times) < 2:
        raise ParseError(f"{path}: need at least two samples")
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or not np.allclose(steps, dt, rtol=GRID_RTOL, atol=1e-6):
        raise NonUniformGrid(f"{path}: timestamps are not uniformly spaced")
    try:
        return PowerSeries(times[0], dt, np.array(values))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def write_power_csv(series: PowerSeries, path):
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "power"])
        for t, v in zip(series.times, series.values):
            writer.writerow([format_number(t), format_number(v)])
