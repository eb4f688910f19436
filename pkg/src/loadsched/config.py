"""Scenario configuration files.

A scenario is an INI file::

    [scenario]
    name = clear-perfect
    kind = perfect              ; perfect | persistence | external
    dt = 60                     ; simulation step, s
    decision_interval = 60      ; s, multiple of dt
    horizon = 360               ; s, multiple of decision_interval
    end_rule = extendable       ; strict | extendable
    first_step_fixed = false
    dwell_rounding = ceil       ; exact | ceil
    power_unit = fraction       ; fraction | watts
    nominal_power = 1.0         ; plant nominal power in power_unit
    ; duration = 43200          ; closed-loop span, s (optional)
    ; actual_power = actual.csv ; timestamp,power (optional)
    ; forecast_file = fc.csv    ; issue_time,target_time,power (external only)

    [clearsky]
    p_peak = 1.0
    t_rise = 21600
    t_set = 64800

    [cloud]                     ; optional, shapes a synthesized actual day
    steps = 36000:37800:0.35, 46800:48000:0.6

    [criterion]
    barrier_weight = 0.001
    mode = hard                 ; hard | soft
    ; barrier_floor = 1e-9
    terminal_check = true       ; hard mode: loads left on must fit P at the horizon end

    [load.L1]
    rated_power = 0.60
    tau_on = 120
    tau_off = 45
    min_on = 600
    min_off = 450
    ; p_off = 0

Relative paths resolve against the file's directory.  Loads keep their
declaration order.
"""
from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, CoverageGap, LoadSchedError, NonDivisibleDwell
from .forecast import ClearSkyProfile, apply_cloud, clear_sky, load_forecast_set, perfect_forecast, persistence_forecast
from .loads import DWELL_ROUNDING, DiscretizedLoad, LoadSpec, discretize, dwell_samples
from .mpc import CriterionConfig, ScenarioTrajectory, closed_loop, decision_constraints
from .schedule_space import DwellConstraint, EndRule
from .series import PowerSeries, read_power_csv


class ScenarioKind(str, enum.Enum):
    PERFECT = "perfect"
    PERSISTENCE = "persistence"
    EXTERNAL = "external"


POWER_UNITS = ("fraction", "watts")


def divides(small: float, big: float) -> bool:
    ratio = Fraction(big).limit_denominator(10**9) / Fraction(small).limit_denominator(10**9)
    return ratio.denominator == 1 and ratio >= 1


def parse_cloud_steps(text: str) -> tuple[tuple[float, float, float], ...]:
    """Parse ``start:end:factor`` items separated by commas."""
    steps = []
    for item in text.split(","):
        if not item.strip():
            continue
        try:
            start, end, factor = (float(x) for x in item.split(":"))
        except ValueError:
            raise ConfigError(f"cloud: step {item.strip()!r} is not start:end:factor") from None
        if not (end > start and factor >= 0):
            raise ConfigError(f"cloud: bad step {item.strip()!r}")
        steps.append((start, end, factor))
    return tuple(steps)


@dataclass(frozen=True)
class ScenarioConfig:
    loads: tuple[LoadSpec, ...]
    dt: float
    decision_interval: float
    horizon: float
    scenario: ScenarioKind = ScenarioKind.PERFECT
    name: str = "scenario"
    clearsky: ClearSkyProfile | None = None
    actual_power: Path | None = None
    forecast_file: Path | None = None
    criterion: CriterionConfig = field(default_factory=CriterionConfig)
    end_rule: EndRule = EndRule.STRICT
    first_step_fixed: bool = False
    dwell_rounding: str = "ceil"
    power_unit: str = "fraction"
    duration: float | None = None
    cloud: tuple[tuple[float, float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "scenario", ScenarioKind(self.scenario))
        object.__setattr__(self, "end_rule", EndRule.parse(self.end_rule))
        object.__setattr__(self, "loads", tuple(self.loads))
        object.__setattr__(self, "cloud", tuple(tuple(c) for c in self.cloud))

    # -- validation -------------------------------------------------------
    def validate(self) -> "ScenarioConfig":
        """Raise :class:`ConfigError` naming the first violated field."""
        if not self.loads:
            raise ConfigError("loads: at least one [load.<id>] section is required")
        ids = [ld.id for ld in self.loads]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"loads: duplicate load ids {ids}")
        for name in ("dt", "decision_interval", "horizon"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name}: must be a positive number of seconds, got {value!r}")
        if not divides(self.dt, self.decision_interval):
            raise ConfigError(
                f"decision_interval: {self.decision_interval} s is not a multiple of dt = {self.dt} s"
            )
        if not divides(self.decision_interval, self.horizon):
            raise ConfigError(
                f"horizon: {self.horizon} s is not a multiple of decision_interval = {self.decision_interval} s"
            )
        if self.dwell_rounding not in DWELL_ROUNDING:
            raise ConfigError(f"dwell_rounding: must be one of {DWELL_ROUNDING}, got {self.dwell_rounding!r}")
        if self.power_unit not in POWER_UNITS:
            raise ConfigError(f"power_unit: must be one of {POWER_UNITS}, got {self.power_unit!r}")
        if self.power_unit == "fraction" and any(ld.rated_power > 1 for ld in self.loads):
            raise ConfigError("power_unit: fraction units require rated_power <= 1 for every load")
        for ld in self.loads:
            for attr in ("min_on", "min_off"):
                for grid_name, grid in (("dt", self.dt), ("decision_interval", self.decision_interval)):
                    try:
                        dwell_samples(getattr(ld, attr), grid, self.dwell_rounding)
                    except NonDivisibleDwell as exc:
                        raise ConfigError(f"load.{ld.id}.{attr}: {exc} ({grid_name}); "
                                          "set dwell_rounding = ceil to round up") from None
        if self.scenario is ScenarioKind.PERSISTENCE and self.clearsky is None:
            raise ConfigError("clearsky: the persistence scenario needs a [clearsky] section")
        if self.scenario is ScenarioKind.EXTERNAL and self.forecast_file is None:
            raise ConfigError("forecast_file: the external scenario needs forecast_file")
        if self.actual_power is None and self.clearsky is None:
            raise ConfigError("actual_power: give actual_power or a [clearsky] section to synthesize it")
        if self.duration is not None:
            if not self.duration > 0 or not divides(self.decision_interval, self.duration):
                raise ConfigError(
                    f"duration: {self.duration} s must be a positive multiple of decision_interval"
                )
        for start, end, factor in self.cloud:
            if not (end > start and factor >= 0):
                raise ConfigError(f"cloud: bad step {start}:{end}:{factor}")
        return self

    # -- derived quantities ----------------------------------------------
    @property
    def hold(self) -> int:
        return round(self.decision_interval / self.dt)

    @property
    def horizon_decisions(self) -> int:
        return round(self.horizon / self.decision_interval)

    @property
    def horizon_samples(self) -> int:
        return round(self.horizon / self.dt)

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def actual_series(self, duration: float | None = None) -> PowerSeries:
        """Actual power on the simulation grid: the file, or a synthesized day."""
        if self.actual_power is not None:
            return read_power_csv(self.actual_power)
        span = self.default_duration() if duration is None else duration
        count = round(span / self.dt) + self.horizon_samples + 1
        series = clear_sky(self.clearsky, self.clearsky.t_rise, self.dt, count)
        return apply_cloud(series, self.cloud)

    def default_duration(self, actual: PowerSeries | None = None, horizon: float | None = None) -> float:
        if self.duration is not None:
            return float(self.duration)
        horizon = self.horizon if horizon is None else horizon
        if self.actual_power is None:
            span = self.clearsky.t_set - self.clearsky.t_rise
        else:
            actual = actual if actual is not None else read_power_csv(self.actual_power)
            span = (len(actual) - 1) * actual.dt - horizon
        return math.floor(span / self.decision_interval + 1e-9) * self.decision_interval

    def prepare(self, duration: float | None = None) -> "PreparedScenario":
        self.validate()
        try:
            loads = [discretize(ld, self.dt, self.dwell_rounding) for ld in self.loads]
            actual = self.actual_series(duration)
            if not math.isclose(actual.dt, self.dt, rel_tol=1e-9):
                raise ConfigError(f"dt: actual power is sampled every {actual.dt} s, config says {self.dt} s")
            span = self.default_duration(actual) if duration is None else duration
            decisions = round(span / self.decision_interval)
            if decisions < 1:
                raise ConfigError("duration: the closed loop needs at least one decision")
            needed = decisions * self.hold + self.horizon_samples + 1
            if len(actual) < needed:
                raise CoverageGap(
                    f"actual power has {len(actual)} samples; {needed} are needed for "
                    f"{decisions} decisions with a {self.horizon} s horizon"
                )
            constraints = decision_constraints(loads, self.decision_interval, self.horizon_decisions,
                                               self.end_rule, self.dwell_rounding)
            provider = self._provider(actual, decisions)
        except ConfigError:
            raise
        except LoadSchedError as exc:
            raise type(exc)(f"{self.name}: {exc}") from exc
        return PreparedScenario(self, loads, constraints, actual, provider, decisions)

    def _provider(self, actual: PowerSeries, decisions: int) -> Callable[[float], PowerSeries]:
        n = self.horizon_samples
        if self.scenario is ScenarioKind.PERFECT:
            return lambda t: perfect_forecast(actual, t, n)
        if self.scenario is ScenarioKind.PERSISTENCE:
            reference = clear_sky(self.clearsky, actual.t0, actual.dt, len(actual))
            return lambda t: persistence_forecast(actual, reference, t, n)
        issues = actual.t0 + self.decision_interval * np.arange(decisions)
        fset = load_forecast_set(self.forecast_file, horizon=n, issues=[float(t) for t in issues])
        return lambda t: fset.window(t, n)

    # -- file IO -----------------------------------------------------------
    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc}") from exc
        return cls.from_string(text, base_dir=path.parent)

    @classmethod
    def from_string(cls, text: str, base_dir=".") -> "ScenarioConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config: {exc}") from exc
        base_dir = Path(base_dir)
        if not parser.has_section("scenario"):
            raise ConfigError("scenario: missing [scenario] section")
        sc = parser["scenario"]

        def number(section, key, default=None, required=True):
            if key not in section:
                if default is not None or not required:
                    return default
                raise ConfigError(f"{key}: required in [{section.name}]")
            try:
                return float(section[key])
            except ValueError:
                raise ConfigError(f"{key}: not a number: {section[key]!r}") from None

        def choice(section, key, default, parse):
            try:
                return parse(section.get(key, default).strip().lower())
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None

        def boolean(section, key, default):
            raw = section.get(key, default).strip().lower()
            if raw not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
            return raw in ("true", "yes", "1")

        def path_of(key):
            value = sc.get(key)
            return (base_dir / value.strip()) if value else None

        known = {"name", "kind", "dt", "decision_interval", "horizon", "end_rule", "first_step_fixed",
                 "dwell_rounding", "power_unit", "nominal_power", "duration", "actual_power", "forecast_file"}
        unknown = set(sc.keys()) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown key in [scenario]")

        loads = []
        for section_name in parser.sections():
            if not section_name.startswith("load."):
                if section_name not in ("scenario", "clearsky", "criterion", "cloud"):
                    raise ConfigError(f"[{section_name}]: unknown section")
                continue
            sec = parser[section_name]
            load_id = section_name[len("load."):]
            try:
                loads.append(LoadSpec(
                    id=load_id,
                    rated_power=number(sec, "rated_power"),
                    tau_on=number(sec, "tau_on"),
                    tau_off=number(sec, "tau_off"),
                    min_on=number(sec, "min_on"),
                    min_off=number(sec, "min_off"),
                    p_off=number(sec, "p_off", 0.0),
                ))
            except LoadSchedError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"load.{load_id}: {exc}") from None

        clearsky = None
        if parser.has_section("clearsky"):
            cs = parser["clearsky"]
            try:
                clearsky = ClearSkyProfile(number(cs, "p_peak"), number(cs, "t_rise"), number(cs, "t_set"),
                                           cs.get("shape", "half_sine").strip().lower())
            except ConfigError:
                raise
            except (LoadSchedError, ValueError) as exc:
                raise ConfigError(f"clearsky: {exc}") from None

        cloud = parse_cloud_steps(parser["cloud"].get("steps", "")) if parser.has_section("cloud") else ()

        nominal = number(sc, "nominal_power", 1.0)
        criterion = CriterionConfig(p_ref=nominal) if nominal > 0 else None
        if criterion is None:
            raise ConfigError(f"nominal_power: must be > 0, got {nominal}")
        if parser.has_section("criterion"):
            cr = parser["criterion"]
            unknown = set(cr.keys()) - {"barrier_weight", "barrier_floor", "mode", "terminal_check"}
            if unknown:
                raise ConfigError(f"{sorted(unknown)[0]}: unknown key in [criterion]")
            try:
                criterion = CriterionConfig(
                    barrier_weight=number(cr, "barrier_weight", CriterionConfig.barrier_weight),
                    barrier_floor=number(cr, "barrier_floor", required=False),
                    mode=cr.get("mode", "hard").strip().lower(),
                    p_ref=nominal,
                    terminal_check=boolean(cr, "terminal_check", "true"),
                )
            except ConfigError:
                raise
            except (LoadSchedError, ValueError) as exc:
                raise ConfigError(f"criterion: {exc}") from None

        duration = number(sc, "duration", required=False)
        return cls(
            loads=tuple(loads),
            dt=number(sc, "dt"),
            decision_interval=number(sc, "decision_interval"),
            horizon=number(sc, "horizon"),
            scenario=choice(sc, "kind", "perfect", ScenarioKind),
            name=sc.get("name", "scenario").strip(),
            clearsky=clearsky,
            actual_power=path_of("actual_power"),
            forecast_file=path_of("forecast_file"),
            criterion=criterion,
            end_rule=choice(sc, "end_rule", "strict", EndRule.parse),
            first_step_fixed=boolean(sc, "first_step_fixed", "false"),
            dwell_rounding=sc.get("dwell_rounding", "ceil").strip().lower(),
            power_unit=sc.get("power_unit", "fraction").strip().lower(),
            duration=duration,
            cloud=tuple(cloud),
        )


@dataclass
class PreparedScenario:
    config: ScenarioConfig
    loads: list[DiscretizedLoad]
    constraints: list[DwellConstraint]
    actual: PowerSeries
    provider: Callable[[float], PowerSeries]
    decisions: int

    def run(self, threads: int = 1) -> ScenarioTrajectory:
        cfg = self.config
        return closed_loop(
            self.loads, self.actual, self.provider,
            hold=cfg.hold,
            horizon_samples=cfg.horizon_samples,
            decisions=self.decisions,
            cfg=cfg.criterion,
            constraints=self.constraints,
            first_step_fixed=cfg.first_step_fixed,
            threads=threads,
        )
