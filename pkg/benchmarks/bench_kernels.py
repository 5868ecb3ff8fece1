"""Compiled kernels vs the numpy fallback.

Two parts:

* per-kernel timings, calling ``emdapf._kernels`` and ``emdapf._fallback``
  directly on identical inputs;
* end-to-end ``run_apf`` on the default scenario in a fresh interpreter per
  backend (the backend is fixed at import, so ``EMDAPF_PURE_PYTHON=1``
  selects the fallback).

Usage::

    python benchmarks/bench_kernels.py [--repeat N] [--no-e2e]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from emdapf import _fallback

try:
    from emdapf import _kernels
except ImportError:
    _kernels = None

E2E = """
import time
from emdapf import BACKEND
from emdapf.apf import ApfConfig, run_apf
from emdapf.plant import ScenarioConfig, synthesize
plant = synthesize(ScenarioConfig())
best = float("inf")
for _ in range({repeat}):
    t = time.perf_counter()
    for mode in ("baseline", "emd_enhanced"):
        run_apf(plant, ApfConfig(mode=mode))
    best = min(best, time.perf_counter() - t)
print(BACKEND, best)
"""


def cases(n: int, rng: np.random.Generator):
    t = np.arange(n) * 1e-5
    x = np.sin(2 * np.pi * 50 * t) + 0.2 * np.sin(2 * np.pi * 1000 * t) + 0.01 * rng.normal(size=n)
    ref = np.vstack([np.sin(2 * np.pi * 50 * t + k) for k in range(4)])
    return {
        "local_extrema": lambda m: m.local_extrema(x),
        "zero_crossings": lambda m: m.zero_crossings(x),
        "sd_sum": lambda m: m.sd_sum(x, 0.9 * x, 1e-12),
        "hysteresis_track": lambda m: m.hysteresis_track(ref, 0.04, 2000.0, 1e-5, np.zeros(4), np.zeros(4, np.uint8), 3),
    }


def bench(fn, repeat: int) -> float:
    timer = timeit.Timer(fn)
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="samples per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true", help="skip the end-to-end runs")
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not built; only the fallback can be timed", file=sys.stderr)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'fallback':>14}{'cython':>14}{'speedup':>10}")
    for name, call in cases(args.n, rng).items():
        slow = bench(lambda: call(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:<18}{slow * 1e3:>12.3f}ms{'-':>14}{'-':>10}")
            continue
        fast = bench(lambda: call(_kernels), args.repeat)
        print(f"{name:<18}{slow * 1e3:>12.3f}ms{fast * 1e3:>12.3f}ms{slow / fast:>9.1f}x")

    if args.no_e2e:
        return 0
    print("\nend-to-end run_apf, default scenario, both modes (best of %d)" % args.repeat)
    code = E2E.format(repeat=args.repeat)
    for pure in ("0", "1"):
        env = dict(os.environ, EMDAPF_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<8}{float(secs):8.3f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
