"""Compiled versus pure-Python scoring kernels.

Two measurements:

* kernel: every ``best_candidate`` call made during a clear-day closed loop is
  recorded, then replayed through both backends; answers must agree exactly.
* end to end: the same closed loop run with each backend in a fresh process
  (``LOADSCHED_BACKEND=python`` forces the fallback).

Usage::

    python benchmarks/bench_kernels.py [--horizon 360] [--duration 43200] [--repeat 3]
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

from loadsched import _pykernels, kernels
from loadsched.config import ScenarioConfig
from loadsched.forecast import ClearSkyProfile
from loadsched.loads import table_one
from loadsched.mpc import CriterionConfig


def day(horizon: float, duration: float) -> ScenarioConfig:
    return ScenarioConfig(
        loads=tuple(table_one()), dt=60.0, decision_interval=60.0, horizon=horizon,
        scenario="perfect", name="bench", clearsky=ClearSkyProfile(1.0, 21600.0, 64800.0),
        criterion=CriterionConfig(), end_rule="extendable", duration=duration,
    )


def record_calls(config: ScenarioConfig) -> list[tuple]:
    calls = []
    original = kernels.best_candidate

    def spy(*args):
        calls.append(args)
        return original(*args)

    kernels.best_candidate = spy
    try:
        config.prepare().run()
    finally:
        kernels.best_candidate = original
    return calls


def replay(backend, calls, repeat: int) -> tuple[float, list]:
    best = float("inf")
    answers = []
    for _ in range(repeat):
        began = time.perf_counter()
        answers = [backend.best_candidate(*args) for args in calls]
        best = min(best, time.perf_counter() - began)
    return best, answers


def end_to_end(backend: str, horizon: float, duration: float) -> float:
    code = (
        "import sys, time; sys.path.insert(0, %r)\n"
        "from bench_kernels import day\n"
        "cfg = day(%r, %r); prepared = cfg.prepare()\n"
        "t = time.perf_counter(); prepared.run(); print(time.perf_counter() - t)\n"
    ) % (os.path.dirname(os.path.abspath(__file__)), horizon, duration)
    env = dict(os.environ, LOADSCHED_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True, capture_output=True, text=True)
    return float(out.stdout.strip())


def eval_count(args) -> int:
    count = 1
    for traces in args[1]:
        count *= len(traces)
    return count


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--horizon", type=float, default=360.0, help="horizon in seconds")
    parser.add_argument("--duration", type=float, default=43200.0, help="closed-loop span in seconds")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    config = day(args.horizon, args.duration)
    calls = record_calls(config)
    sizes = [eval_count(c) for c in calls]
    print(f"active backend: {kernels.BACKEND}")
    print(f"{len(calls)} kernel calls, full candidate space per call: "
          f"min {min(sizes)}, mean {sum(sizes) / len(sizes):.0f}, max {max(sizes)}")
    t_py, want = replay(_pykernels, calls, args.repeat)
    print(f"python kernel   {t_py:9.4f} s")
    if kernels.compiled_backend is None:
        print("compiled kernel not built; run `python setup.py build_ext --inplace`")
        return 0
    t_c, got = replay(kernels.compiled_backend, calls, args.repeat)
    print(f"compiled kernel {t_c:9.4f} s   speedup x{t_py / t_c:.1f}   identical answers: {got == want}")
    for backend in ("python", "cython"):
        print(f"end to end ({backend:6s}) {end_to_end(backend, args.horizon, args.duration):9.4f} s")
    return 0 if got == want else 1


if __name__ == "__main__":
    sys.exit(main())
