"""Command line front end.

Subcommands::

    loadsched run      --config scenario.ini --out results/
    loadsched sweep    --config scenario.ini --intervals 30,60,120 --horizons 210,270,360 [--format text]
    loadsched compare  --config a.ini --config b.ini [--format text]
    loadsched validate --config scenario.ini
    loadsched gen-clearsky --config scenario.ini --out actual.csv

``run`` writes ``trajectory.csv``, ``events.csv``, ``summary.txt`` and
``summary.json``.  Those four depend only on the configuration, so they hash
the same on every rerun and at every ``--threads`` value.  Wall time, thread
count and kernel backend go to ``run_info.json`` instead.

Errors in the configuration or the data exit with status 1 and a one-line
diagnostic on stderr that names the offending field.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .config import ScenarioConfig, divides, parse_cloud_steps
from .errors import ConfigError, IncompatibleScenarios, LoadSchedError
from .forecast import ClearSkyProfile, apply_cloud, clear_sky
from .metrics import battery_estimate, efficiency, exceedance, write_events_csv
from .mpc import ScenarioTrajectory
from .series import format_number, write_power_csv

PLACEHOLDER = "⊘"


# -- artifacts ---------------------------------------------------------------

def summarize(config: ScenarioConfig, traj: ScenarioTrajectory) -> dict:
    """Flat summary record; every metric is recomputable from the trajectory."""
    actual, demand = traj.actual_series, traj.demand_series
    report = exceedance(actual, demand)
    battery = battery_estimate(report, config.loads)
    cand = traj.candidates
    return {
        "scenario": config.name,
        "kind": config.scenario.value,
        "loads": ",".join(traj.load_ids),
        "dt": config.dt,
        "decision_interval": config.decision_interval,
        "horizon_s": config.horizon,
        "horizon_samples": config.horizon_samples,
        "horizon_decisions": config.horizon_decisions,
        "end_rule": config.end_rule.value,
        "first_step_fixed": config.first_step_fixed,
        "decisions": int(len(traj.decision_times)),
        "start": float(traj.sample_times[0] - config.dt),
        "end": float(traj.sample_times[-1]),
        "efficiency": efficiency(actual, demand),
        "total_ee": report.total_ee,
        "max_event_ee": report.max_event_ee,
        "pe_events": report.event_count,
        "violation_steps": report.violation_steps,
        "infeasible_steps": int(np.count_nonzero(~traj.feasible)),
        "candidates_min": int(cand.min()),
        "candidates_mean": float(np.mean(cand)),
        "candidates_max": int(cand.max()),
        "battery_max_event_ee": battery.max_event_ee,
        "battery_largest_unit_rule": battery.largest_unit_rule,
    }


def _text_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return format_number(value)
    return str(value)


def write_trajectory_csv(traj: ScenarioTrajectory, path):
    n = len(traj.load_ids)
    header = ["time", "actual", "forecast_at_decision", "demand"]
    header += [f"p_load_{i + 1}" for i in range(n)] + [f"w_{i + 1}" for i in range(n)]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k, t in enumerate(traj.sample_times):
            row = [t, traj.actual[k], traj.forecast_at_decision[k], traj.demand[k]]
            row += [traj.per_load[i, k] for i in range(n)]
            writer.writerow([format_number(v) for v in row] + [int(traj.commands[i, k]) for i in range(n)])


def write_artifacts(config: ScenarioConfig, traj: ScenarioTrajectory, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(config, traj)
    write_trajectory_csv(traj, out / "trajectory.csv")
    write_events_csv(exceedance(traj.actual_series, traj.demand_series), out / "events.csv")
    (out / "summary.txt").write_text("".join(f"{k} = {_text_value(v)}\n" for k, v in summary.items()))
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


# -- tables --------------------------------------------------------------------

def render_table(header: list[str], rows: list[list], fmt: str) -> str:
    cells = [[_text_value(v) for v in row] for row in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(cells)
        return buf.getvalue()
    widths = [max(len(h), *(len(r[j]) for r in cells)) if cells else len(h) for j, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return "\n".join(lines) + "\n"


@dataclass
class SweepCell:
    decision_interval: float
    horizon: float
    summary: dict | None      # None marks a cell that breaks the nesting rule

    def value(self, key):
        return PLACEHOLDER if self.summary is None else self.summary[key]


def _lcm(values) -> Fraction:
    result = Fraction(0)
    for v in values:
        f = Fraction(v).limit_denominator(10**9)
        if result == 0:
            result = f
            continue
        num = math.lcm(result.numerator * f.denominator, f.numerator * result.denominator)
        den = result.denominator * f.denominator
        result = Fraction(num, den)
    return result


def sweep(base: ScenarioConfig, intervals, horizons, threads: int = 1) -> list[SweepCell]:
    """Run every (decision_interval, horizon) cell over one common span.

    Cells where dt does not divide the interval, or the interval does not
    divide the horizon, are reported as placeholders and not run.
    """
    if not intervals or not horizons:
        raise ConfigError("sweep: --intervals and --horizons must be non-empty")
    valid = [(tk, n) for tk in intervals for n in horizons if divides(base.dt, tk) and divides(tk, n)]
    duration = None
    if valid:
        step = float(_lcm(sorted({tk for tk, _ in valid})))
        span = base.default_duration(horizon=max(n for _, n in valid))
        duration = math.floor(span / step + 1e-9) * step
        if duration <= 0:
            raise ConfigError("duration: the sweep span is shorter than one common decision interval")
    cells = []
    for tk in intervals:
        for n in horizons:
            if (tk, n) not in valid:
                cells.append(SweepCell(tk, n, None))
                continue
            cfg = base.replace(decision_interval=tk, horizon=n, duration=duration)
            traj = cfg.prepare().run(threads=threads)
            cells.append(SweepCell(tk, n, summarize(cfg, traj)))
    return cells


def sweep_tables(cells: list[SweepCell], fmt: str) -> str:
    if fmt == "csv":
        header = ["decision_interval", "horizon", "efficiency", "total_ee", "pe_events"]
        rows = [[c.decision_interval, c.horizon, c.value("efficiency"), c.value("total_ee"), c.value("pe_events")]
                for c in cells]
        return render_table(header, rows, "csv")
    intervals = list(dict.fromkeys(c.decision_interval for c in cells))
    horizons = list(dict.fromkeys(c.horizon for c in cells))
    grid = {(c.decision_interval, c.horizon): c for c in cells}
    out = []
    for key, title, fmt_value in (
        ("efficiency", "efficiency (%)", lambda v: f"{100 * v:.2f}"),
        ("total_ee", "total energy exceedance", lambda v: f"{v:.6g}"),
    ):
        header = ["t_k \\ N"] + [format_number(n) for n in horizons]
        rows = []
        for tk in intervals:
            row = [format_number(tk)]
            for n in horizons:
                v = grid[(tk, n)].value(key)
                row.append(v if v == PLACEHOLDER else fmt_value(v))
            rows.append(row)
        out.append(title + "\n" + render_table(header, rows, "text"))
    return "\n".join(out)


COMPARE_KEYS = ["efficiency", "total_ee", "pe_events", "violation_steps", "max_event_ee", "infeasible_steps"]


def check_compatible(configs: list[ScenarioConfig]):
    """Scenarios are comparable when loads, grids and actual power agree."""
    first = configs[0]
    reference = first.prepare()
    for cfg in configs[1:]:
        for attr in ("loads", "dt", "decision_interval", "horizon"):
            if getattr(cfg, attr) != getattr(first, attr):
                raise IncompatibleScenarios(f"{attr}: {cfg.name!r} differs from {first.name!r}")
        prepared = cfg.prepare()
        same = (prepared.decisions == reference.decisions
                and prepared.actual.same_grid(reference.actual)
                and len(prepared.actual) == len(reference.actual)
                and np.array_equal(prepared.actual.values, reference.actual.values))
        if not same:
            raise IncompatibleScenarios(f"actual_power: {cfg.name!r} and {first.name!r} use different actual power")


def compare(configs: list[ScenarioConfig], threads: int = 1) -> list[dict]:
    if not configs:
        raise ConfigError("compare: at least one --config is required")
    check_compatible(configs)
    return [summarize(cfg, cfg.prepare().run(threads=threads)) for cfg in configs]


# -- command handlers ------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of seconds, got {text!r}") from None


def _cmd_run(args) -> int:
    config = ScenarioConfig.from_file(args.config[0])
    out = Path(args.out or "results")
    began = time.perf_counter()
    traj = config.prepare().run(threads=args.threads)
    summary = write_artifacts(config, traj, out)
    info = {"wall_time_s": time.perf_counter() - began, "threads": args.threads, "backend": kernels.BACKEND}
    (out / "run_info.json").write_text(json.dumps(info, indent=2) + "\n")
    keys = ["efficiency", "total_ee", "pe_events", "violation_steps", "decisions"]
    print(render_table(keys, [[summary[k] for k in keys]], args.format), end="")
    return 0


def _cmd_sweep(args) -> int:
    config = ScenarioConfig.from_file(args.config[0])
    intervals = _floats(args.intervals) if args.intervals else [config.decision_interval]
    horizons = _floats(args.horizons) if args.horizons else [config.horizon]
    cells = sweep(config, intervals, horizons, threads=args.threads)
    text = sweep_tables(cells, args.format)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(sweep_tables(cells, "csv"))
        (out / "sweep.txt").write_text(sweep_tables(cells, "text"))
    print(text, end="")
    return 0


def _cmd_compare(args) -> int:
    configs = [ScenarioConfig.from_file(p) for p in args.config]
    summaries = compare(configs, threads=args.threads)
    header = ["scenario", "kind"] + COMPARE_KEYS
    rows = [[s["scenario"], s["kind"]] + [s[k] for k in COMPARE_KEYS] for s in summaries]
    text = render_table(header, rows, args.format)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(render_table(header, rows, "csv"))
    print(text, end="")
    return 0


def _cmd_validate(args) -> int:
    for path in args.config:
        config = ScenarioConfig.from_file(path)
        prepared = config.prepare()
        print(f"{path}: ok ({config.name}, {len(config.loads)} loads, {prepared.decisions} decisions, "
              f"N = {format_number(config.horizon)} s = {config.horizon_samples} samples)")
    return 0


def _cmd_gen_clearsky(args) -> int:
    cloud = ()
    if args.config:
        config = ScenarioConfig.from_file(args.config[0])
        if config.clearsky is None:
            raise ConfigError("clearsky: the config has no [clearsky] section")
        profile, dt, cloud = config.clearsky, config.dt, config.cloud
    else:
        if args.p_peak is None or args.t_rise is None or args.t_set is None:
            raise ConfigError("gen-clearsky: give --config or all of --p-peak, --t-rise, --t-set")
        try:
            profile = ClearSkyProfile(args.p_peak, args.t_rise, args.t_set)
        except LoadSchedError as exc:
            raise ConfigError(f"clearsky: {exc}") from None
        dt = args.dt
    if args.dt is not None:
        dt = args.dt
    if dt is None or not dt > 0:
        raise ConfigError("dt: give a positive --dt")
    if args.cloud is not None:
        cloud = parse_cloud_steps(args.cloud)
    start = profile.t_rise if args.start is None else args.start
    end = profile.t_set if args.end is None else args.end
    if not end > start:
        raise ConfigError("end: must be after start")
    count = math.floor((end - start) / dt + 1e-9) + 1
    series = apply_cloud(clear_sky(profile, start, dt, count), cloud)
    out = Path(args.out or "actual_power.csv")
    if out.is_dir() or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
        out = out / "actual_power.csv"
    write_power_csv(series, out)
    print(f"wrote {len(series)} samples to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loadsched", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", default=[], metavar="PATH", help="scenario INI file")
    common.add_argument("--out", metavar="PATH", help="output directory (gen-clearsky: CSV file)")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="scoring threads (default 1)")
    common.add_argument("--format", choices=("csv", "text"), default="text", help="table format on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="closed-loop run with artifacts")
    p.set_defaults(handler=_cmd_run, need_config=True)
    p = sub.add_parser("sweep", parents=[common], help="efficiency grid over decision intervals and horizons")
    p.add_argument("--intervals", metavar="S,S,...", help="decision intervals in seconds")
    p.add_argument("--horizons", metavar="S,S,...", help="horizons in seconds")
    p.set_defaults(handler=_cmd_sweep, need_config=True)
    p = sub.add_parser("compare", parents=[common], help="side-by-side summaries (repeat --config)")
    p.set_defaults(handler=_cmd_compare, need_config=True)
    p = sub.add_parser("validate", parents=[common], help="check configs without running")
    p.set_defaults(handler=_cmd_validate, need_config=True)
    p = sub.add_parser("gen-clearsky", parents=[common], help="write a synthetic actual-power CSV")
    p.add_argument("--p-peak", type=float)
    p.add_argument("--t-rise", type=float)
    p.add_argument("--t-set", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--start", type=float, help="first timestamp (default t_rise)")
    p.add_argument("--end", type=float, help="last timestamp (default t_set)")
    p.add_argument("--cloud", metavar="START:END:FACTOR,...", help="cloud steps (overrides the config)")
    p.set_defaults(handler=_cmd_gen_clearsky, need_config=False)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.need_config and not args.config:
        parser.error(f"{args.command}: --config is required")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"loadsched: error: {exc}", file=sys.stderr)
        return 1
    except LoadSchedError as exc:
        print(f"loadsched: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
