"""Compare the compiled kernels with the numpy fallback.

Run ``python3 benchmarks/bench_kernels.py``. Kernel timings call both
backends directly; the end-to-end timings run a Dinkelbach solve and a
Monte Carlo collision estimate in subprocesses, with and without
``COGRA_PURE_PYTHON=1``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cogra import _kernels_py
from cogra.fading import build_grid

try:
    from cogra import _ckernels
except ImportError:  # pragma: no cover - depends on build
    _ckernels = None

END_TO_END = """
import time
from cogra import kernels
from cogra.mcsim import SimConfig, simulate_collision
from cogra.optimizer import dinkelbach_ee
from cogra.scenario import PowerConstraints, Scenario, SolverConfig
from cogra.sensing import SensingSpec
from cogra.traffic import VOIP
sc = Scenario(VOIP, SensingSpec.from_targets(0.9, 0.1), PowerConstraints(q_avg=0.1, pc_max=0.3, p_avg=1.0),
              frame=125.0, solver=SolverConfig(grid_order=64))
t = time.perf_counter(); dinkelbach_ee(sc); a = time.perf_counter() - t
t = time.perf_counter(); simulate_collision(VOIP, 400.0, 7.21, SimConfig(trials=100_000)); b = time.perf_counter() - t
print(kernels.BACKEND, a, b)
"""


def kernel_cases(order, trials):
    grid = build_grid(order)
    h, g, w = grid.gain_h, grid.gain_g, grid.weight
    args = (0.5, 0.3, 0.01, 0.1, 0.2, np.inf)
    rng = np.random.default_rng(0)
    start = rng.random(trials) < 0.35
    draws = rng.standard_exponential((trials, 16))
    return {
        f"policy_power ({h.size} nodes)": lambda k: k.policy_power(h, g, *args),
        f"policy_moments ({h.size} nodes)": lambda k: k.policy_moments(h, g, w, *args),
        f"rate_moments ({h.size} nodes)": lambda k: k.rate_moments(h, g, w, *args),
        f"renewal_overlap ({trials} trials)": lambda k: k.renewal_overlap(start, draws, 352.0, 650.0, 400.0),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--order", type=int, default=64)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'kernel':38s} {'numpy':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, call in kernel_cases(args.order, args.trials).items():
        py = best_of(lambda: call(_kernels_py), args.repeat)
        if _ckernels is None:
            print(f"{name:38s} {py * 1e6:10.1f}us {'n/a':>12s}")
            continue
        cy = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:38s} {py * 1e6:10.1f}us {cy * 1e6:10.1f}us {py / cy:7.1f}x")

    print()
    print(f"{'end to end':38s} {'dinkelbach':>12s} {'mc 1e5':>12s}")
    for pure in ("1", ""):
        env = {**os.environ, "COGRA_PURE_PYTHON": pure}
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        backend, a, b = out.stdout.split()
        print(f"{backend:38s} {float(a) * 1e3:10.1f}ms {float(b) * 1e3:10.1f}ms")


if __name__ == "__main__":
    main()
