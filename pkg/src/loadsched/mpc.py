"""Moving-horizon on/off scheduling.

At every decision instant the optimizer scores every admissible fleet
schedule against the forecast window with a barrier-penalized tracking cost,
applies only the first column, and moves on.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from . import kernels
from .errors import DimensionMismatch, EmptyAdmissibleSet, LengthMismatch, NonPositiveParameter
from .loads import DiscretizedLoad, FleetState, LoadState, dwell_samples, step
from .schedule_space import DwellConstraint, EndRule, admissible_rows
from .series import PowerSeries

if TYPE_CHECKING:
    from .config import ScenarioConfig


class BarrierMode(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class CriterionConfig:
    """Weights of the tracking criterion.

    Errors enter the cost divided by ``p_ref`` (the plant nominal power), so
    the criterion is dimensionless.  ``barrier_floor`` is in power units and
    defaults to ``1e-9 * p_ref``.

    With ``terminal_check`` (hard barrier only) a schedule is feasible only
    if the loads it leaves on at the horizon end could stay on at the last
    forecast value: ``demand_end + sum(rated - p_end over loads on) < P_end``.
    Without it, a load may be committed past the horizon into a shortfall
    that the window cannot show.
    """

    barrier_weight: float = 1e-3
    barrier_floor: float | None = None
    mode: BarrierMode = BarrierMode.HARD
    p_ref: float = 1.0
    terminal_check: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", BarrierMode(self.mode))
        if not self.barrier_weight >= 0:
            raise NonPositiveParameter(f"barrier_weight must be >= 0, got {self.barrier_weight!r}")
        if not self.p_ref > 0:
            raise NonPositiveParameter(f"p_ref must be > 0, got {self.p_ref!r}")
        if self.barrier_floor is None:
            object.__setattr__(self, "barrier_floor", 1e-9 * self.p_ref)
        if not self.barrier_floor > 0:
            raise NonPositiveParameter(f"barrier_floor must be > 0, got {self.barrier_floor!r}")

    @property
    def hard(self) -> bool:
        return self.mode is BarrierMode.HARD


def tracking_error(forecast, demand) -> np.ndarray:
    f = forecast.values if isinstance(forecast, PowerSeries) else np.asarray(forecast, dtype=float)
    d = demand.values if isinstance(demand, PowerSeries) else np.asarray(demand, dtype=float)
    if f.shape != d.shape:
        raise LengthMismatch(f"forecast has {f.shape} samples, demand has {d.shape}")
    return f - d


def candidate_cost(e, cfg: CriterionConfig) -> float:
    """Quadratic tracking cost plus a per-sample log barrier.

    Returns ``inf`` for any non-positive error under the hard barrier.
    """
    floor = cfg.barrier_floor / cfg.p_ref
    cost = 0.0
    for value in np.asarray(e, dtype=float):
        x = value / cfg.p_ref
        if cfg.hard and x <= 0:
            return math.inf
        cost += x * x - cfg.barrier_weight * math.log(max(x, floor))
    return cost


@dataclass
class PlanResult:
    applied: np.ndarray
    chosen: np.ndarray
    cost: float
    candidates_evaluated: int
    feasible: bool


def decision_constraints(loads: Sequence[DiscretizedLoad], interval: float, horizon: int,
                         end_rule=EndRule.STRICT, rounding: str = "exact") -> list[DwellConstraint]:
    """Dwell constraints on a decision grid of spacing ``interval`` seconds."""
    return [
        DwellConstraint(
            dwell_samples(ld.spec.min_on, interval, rounding),
            dwell_samples(ld.spec.min_off, interval, rounding),
            horizon,
            end_rule,
        )
        for ld in loads
    ]


def terminal_demand(load: DiscretizedLoad, last_bits, end_power) -> np.ndarray:
    """Highest power each row can still reach if its last command is held."""
    end_power = np.asarray(end_power, dtype=float)
    goal = np.where(np.asarray(last_bits) != 0, load.spec.rated_power, load.spec.p_off)
    return np.maximum(end_power, goal)


def plan_step(fleet: FleetState, loads: Sequence[DiscretizedLoad], window, cfg: CriterionConfig,
              end_rule=EndRule.STRICT, first_step_fixed: bool = False, *, hold: int = 1,
              constraints: Sequence[DwellConstraint] | None = None, threads: int = 1,
              warm_start=None) -> PlanResult:
    """Pick the best admissible schedule for one decision instant.

    ``window`` holds the forecast at the next ``len(window)`` simulation
    samples.  Each schedule column is held for ``hold`` samples, so the
    schedule spans ``len(window) // hold`` decisions.  ``fleet`` dwell counts
    are in simulation samples.

    ``warm_start`` is an optional ``(n, horizon)`` schedule, typically the
    previous plan shifted by one decision.  If it is admissible the search
    scores it first, which speeds up pruning without changing the answer.
    """
    values = window.values if isinstance(window, PowerSeries) else np.asarray(window, dtype=float)
    n = len(loads)
    if len(fleet) != n:
        raise DimensionMismatch(f"fleet state has {len(fleet)} loads, expected {n}")
    if hold < 1 or len(values) == 0 or len(values) % hold:
        raise DimensionMismatch(f"window of {len(values)} samples is not a whole number of {hold}-sample decisions")
    horizon = len(values) // hold
    if constraints is None:
        constraints = [DwellConstraint(ld.n_on, ld.n_off, horizon, end_rule) for ld in loads]
    if len(constraints) != n or any(c.horizon != horizon for c in constraints):
        raise DimensionMismatch("dwell constraints do not match the fleet or the horizon")

    rows, traces = [], []
    terminal = cfg.hard and cfg.terminal_check
    for ld, state, con in zip(loads, fleet.loads, constraints):
        grid_state = LoadState(state.power, state.on, state.dwell // hold)
        r = admissible_rows(con, grid_state, first_step_fixed)
        if len(r) == 0:
            raise EmptyAdmissibleSet(f"load {ld.spec.id!r} has no admissible schedule")
        rows.append(r)
        t = kernels.row_traces(r, hold, state.power, ld.a_on, ld.b_on, ld.a_off, ld.spec.p_off)
        if terminal:
            t = np.hstack([t, terminal_demand(ld, r[:, -1], t[:, -1])[:, None]])
        traces.append(t)
    target = np.append(values, values[-1]) if terminal else values

    scale = cfg.p_ref
    counts = [len(r) for r in rows]
    flat, cost, _ = kernels.best_candidate(
        target / scale,
        [t / scale for t in traces],
        [r[:, 0] for r in rows],
        cfg.barrier_weight,
        cfg.barrier_floor / scale,
        1.0,
        cfg.hard,
        threads,
        len(values),
        _flat_index(rows, warm_start),
    )
    picks = np.unravel_index(flat, counts)
    chosen = np.array([rows[i][picks[i]] for i in range(n)], dtype=np.uint8)
    e = target.copy()
    for i in range(n):
        e = e - traces[i][picks[i]]
    return PlanResult(
        applied=chosen[:, 0].copy(),
        chosen=chosen,
        cost=cost,
        candidates_evaluated=math.prod(counts),
        feasible=bool(np.all(e > 0)),
    )


def _flat_index(rows, schedule) -> int | None:
    """Flat candidate index of ``schedule``, or None if it is not admissible."""
    if schedule is None:
        return None
    schedule = np.asarray(schedule, dtype=np.uint8)
    if schedule.shape != (len(rows), rows[0].shape[1]):
        return None
    flat = 0
    for r, wanted in zip(rows, schedule):
        hit = np.flatnonzero(np.all(r == wanted, axis=1))
        if len(hit) == 0:
            return None
        flat = flat * len(r) + int(hit[0])
    return flat


def shifted(schedule: np.ndarray) -> np.ndarray:
    """Drop the first column and repeat the last one."""
    return np.concatenate([schedule[:, 1:], schedule[:, -1:]], axis=1)


@dataclass
class ScenarioTrajectory:
    """Closed-loop record.

    Decision-indexed arrays have one entry per decision; sample-indexed ones
    cover the simulation samples after ``t0`` (``hold`` per decision).
    """

    t0: float
    dt: float
    hold: int
    load_ids: list[str]
    decision_times: np.ndarray
    applied: np.ndarray              # (decisions, n) command executed over each interval
    windows: np.ndarray              # (decisions, horizon samples) forecast used
    feasible: np.ndarray
    candidates: np.ndarray
    costs: np.ndarray
    sample_times: np.ndarray
    actual: np.ndarray
    demand: np.ndarray
    per_load: np.ndarray             # (n, samples)
    commands: np.ndarray             # (n, samples) command active during the step ending at each sample
    forecast_at_decision: np.ndarray
    initial: FleetState = field(default_factory=FleetState)
    final: FleetState = field(default_factory=FleetState)

    @property
    def actual_series(self) -> PowerSeries:
        return PowerSeries(self.t0 + self.dt, self.dt, self.actual)

    @property
    def demand_series(self) -> PowerSeries:
        return PowerSeries(self.t0 + self.dt, self.dt, self.demand)


def closed_loop(loads: Sequence[DiscretizedLoad], actual: PowerSeries, provider: Callable[[float], PowerSeries],
                *, hold: int, horizon_samples: int, decisions: int, cfg: CriterionConfig,
                constraints: Sequence[DwellConstraint], first_step_fixed: bool = False,
                init: FleetState | None = None, threads: int = 1) -> ScenarioTrajectory:
    """Run ``decisions`` moving-horizon steps starting at ``actual.t0``.

    With ``first_step_fixed`` the combination for the current interval was
    latched by the previous decision; the optimizer fixes it and latches its
    second column for the next interval.
    """
    n = len(loads)
    if init is None:
        init = FleetState(tuple(LoadState(ld.spec.p_off, False, hold * c.n_off) for ld, c in zip(loads, constraints)))
    if len(actual) < decisions * hold + 1:
        raise DimensionMismatch("actual power series is shorter than the closed-loop span")
    samples = decisions * hold
    applied = np.zeros((decisions, n), dtype=np.uint8)
    windows = np.zeros((decisions, horizon_samples))
    feasible = np.zeros(decisions, dtype=bool)
    candidates = np.zeros(decisions, dtype=np.int64)
    costs = np.zeros(decisions)
    per_load = np.zeros((n, samples))
    commands = np.zeros((n, samples), dtype=np.uint8)
    forecast_at = np.zeros(samples)
    decision_times = actual.t0 + actual.dt * hold * np.arange(decisions)

    state = init
    latched = init.commands
    previous = None
    for j, t in enumerate(decision_times):
        window = provider(float(t))
        if len(window) != horizon_samples:
            raise DimensionMismatch(f"forecast at {t} has {len(window)} samples, expected {horizon_samples}")
        windows[j] = window.values
        planning = state
        if first_step_fixed:
            planning = FleetState(tuple(
                s if bool(w) == s.on else LoadState(s.power, bool(w), 0)
                for s, w in zip(state.loads, latched)
            ))
        plan = plan_step(planning, loads, window, cfg, first_step_fixed=first_step_fixed,
                         hold=hold, constraints=constraints, threads=threads,
                         warm_start=None if previous is None else shifted(previous))
        previous = plan.chosen
        if first_step_fixed:
            execute = latched
            latched = plan.chosen[:, 1] if plan.chosen.shape[1] > 1 else plan.chosen[:, 0]
        else:
            execute = plan.applied
        applied[j] = execute
        feasible[j] = plan.feasible
        candidates[j] = plan.candidates_evaluated
        costs[j] = plan.cost
        new_states = []
        for i, (ld, s) in enumerate(zip(loads, state.loads)):
            w = int(execute[i])
            for sub in range(hold):
                s = step(ld, s, w)
                per_load[i, j * hold + sub] = s.power
                commands[i, j * hold + sub] = w
            new_states.append(s)
        state = FleetState(tuple(new_states))
        forecast_at[j * hold:(j + 1) * hold] = window.values[:hold]

    demand = np.zeros(samples)
    for i in range(n):
        demand = demand + per_load[i]
    return ScenarioTrajectory(
        t0=actual.t0,
        dt=actual.dt,
        hold=hold,
        load_ids=[ld.spec.id for ld in loads],
        decision_times=decision_times,
        applied=applied,
        windows=windows,
        feasible=feasible,
        candidates=candidates,
        costs=costs,
        sample_times=actual.t0 + actual.dt * np.arange(1, samples + 1),
        actual=np.array(actual.values[1:samples + 1]),
        demand=demand,
        per_load=per_load,
        commands=commands,
        forecast_at_decision=forecast_at,
        initial=init,
        final=state,
    )


def run_closed_loop(scenario: "ScenarioConfig", threads: int = 1) -> ScenarioTrajectory:
    return scenario.prepare().run(threads=threads)
