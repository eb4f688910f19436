"""Randomized plan_step instances paired with their exhaustive-oracle answer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from loadsched.loads import FleetState, LoadSpec, LoadState, discretize
from loadsched.mpc import BarrierMode, CriterionConfig, plan_step
from loadsched.schedule_space import DwellConstraint, EndRule

import oracles


@dataclass
class PlanCase:
    loads: list
    fleet: FleetState
    constraints: list
    window: np.ndarray
    cfg: CriterionConfig
    first_step_fixed: bool

    def run(self, threads=1):
        return plan_step(self.fleet, self.loads, self.window, self.cfg,
                         first_step_fixed=self.first_step_fixed,
                         constraints=self.constraints, threads=threads)

    def oracle(self):
        strict = [c.end_rule is EndRule.STRICT for c in self.constraints]
        rows = [
            oracles.brute_rows(c.horizon, c.n_on, c.n_off, s.on, s.dwell, st, self.first_step_fixed)
            for c, s, st in zip(self.constraints, self.fleet.loads, strict)
        ]
        params = [(ld.spec.rated_power, ld.a_on, ld.a_off, ld.spec.p_off, s.power)
                  for ld, s in zip(self.loads, self.fleet.loads)]
        idx, cost = oracles.exhaustive_plan(
            list(self.window), params, rows, self.cfg.barrier_weight, self.cfg.barrier_floor,
            self.cfg.hard, self.cfg.hard and self.cfg.terminal_check,
        )
        return np.array([rows[i][r] for i, r in enumerate(idx)], dtype=np.uint8), cost


def random_plan_case(rng: np.random.Generator, n: int = 2, horizon_max: int = 8) -> PlanCase:
    horizon = int(rng.integers(1, horizon_max + 1))
    dt = float(rng.choice([15.0, 30.0, 60.0]))
    twins = rng.random() < 0.2  # identical loads exercise tie-breaking
    loads, states, constraints = [], [], []
    for i in range(n):
        if twins and i > 0:
            spec = LoadSpec(f"L{i + 1}", *[getattr(loads[0].spec, f) for f in
                                           ("rated_power", "tau_on", "tau_off", "min_on", "min_off", "p_off")])
        else:
            spec = LoadSpec(
                f"L{i + 1}",
                rated_power=float(rng.uniform(0.05, 0.7)),
                tau_on=float(rng.uniform(5, 200)),
                tau_off=float(rng.uniform(5, 200)),
                min_on=dt * int(rng.integers(1, 6)),
                min_off=dt * int(rng.integers(1, 6)),
                p_off=float(rng.choice([0.0, 0.02])),
            )
        ld = discretize(spec, dt)
        loads.append(ld)
        if twins and i > 0:
            states.append(states[0])
        else:
            on = bool(rng.integers(0, 2))
            power = float(rng.uniform(spec.p_off, spec.rated_power))
            states.append(LoadState(power, on, int(rng.integers(0, 7))))
        rule = EndRule.STRICT if rng.random() < 0.5 else EndRule.EXTENDABLE
        constraints.append(DwellConstraint(ld.n_on, ld.n_off, horizon, rule))
    level = float(rng.uniform(0.0, 1.4))
    window = np.clip(level + rng.normal(0, 0.15, size=horizon), 0.0, None)
    cfg = CriterionConfig(
        barrier_weight=float(rng.choice([0.0, 1e-3, 0.05, 1.0])),
        mode=BarrierMode.HARD if rng.random() < 0.75 else BarrierMode.SOFT,
        terminal_check=bool(rng.random() < 0.7),
    )
    return PlanCase(loads, FleetState(tuple(states)), constraints, window, cfg, bool(rng.random() < 0.25))
