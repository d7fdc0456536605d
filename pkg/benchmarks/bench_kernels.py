"""Compare the compiled kernels with the numpy fallback.

Times the two fitting kernels at the sizes met in the simulation study, then
a short end-to-end study under each backend (run in a subprocess so the
backend switch happens at import).

    python3 benchmarks/bench_kernels.py [--repeat 2000] [--reps 300]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hypest import _kernels_py

try:
    from hypest import _kernels
except ImportError:
    _kernels = None

STUDY = """
import time
from hypest.asymptotics import ScenarioParams
from hypest.simulator import SIM_ESTIMATORS, run_study
t = time.perf_counter()
run_study(ScenarioParams(n=500, n_reps={reps}, seed=1), estimators=SIM_ESTIMATORS)
print(time.perf_counter() - t)
"""


def problems(rng):
    n = 500
    a = (rng.random(n) < 0.5).astype(float)
    l1 = a + rng.normal(size=n)
    r = (rng.random(n) < 0.35).astype(float)
    y = a + l1 + r + rng.normal(size=n)
    ols = np.column_stack([np.ones(n), a, l1, r])
    logit = np.column_stack([np.ones(n), a, l1])
    return ols, y, logit, r


def time_kernel(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=repeat, repeat=3)) / repeat * 1e6


def study_seconds(backend, reps):
    env = dict(os.environ, HYPEST_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", STUDY.format(reps=reps)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--reps", type=int, default=300)
    args = ap.parse_args()
    if _kernels is None:
        sys.exit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")

    ols, y, logit, r = problems(np.random.default_rng(0))
    print(f"{'kernel':<28}{'cython us':>12}{'numpy us':>12}{'speedup':>10}")
    for label, name, fargs in (("lstsq 500x4", "lstsq", (ols, y)),
                               ("logistic_newton 500x3", "logistic_newton", (logit, r))):
        fast = time_kernel(getattr(_kernels, name), fargs, args.repeat)
        slow = time_kernel(getattr(_kernels_py, name), fargs, args.repeat)
        print(f"{label:<28}{fast:>12.1f}{slow:>12.1f}{slow / fast:>9.2f}x")

    fast, slow = study_seconds("cython", args.reps), study_seconds("python", args.reps)
    label = f"study, {args.reps} replicates"
    print(f"{label:<28}{fast / args.reps * 1e3:>10.2f}ms{slow / args.reps * 1e3:>10.2f}ms"
          f"{slow / fast:>9.2f}x   (per replicate, all 11 estimators)")


if __name__ == "__main__":
    main()
