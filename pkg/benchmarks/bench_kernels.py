"""Time the hot kernels under numba and under the numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by HWL_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, math, sys, time
import numpy as np
from hwl import kernels

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
m = 1 << 18
ang = rng.uniform(0, 2 * math.pi, (2, m))
yx = np.column_stack([np.cos(ang[0]), np.sin(ang[0])])
yy = np.column_stack([np.cos(ang[1]), np.sin(ang[1])])
ux, uy = rng.random(m), rng.random(m)
xs = rng.random((m, 2)); ys = rng.random((m, 2))
lam = np.linspace(0.0, 500.0, m)

cases = {
    "j1 (2^18 points)": lambda: kernels.j1(lam),
    "pair_power_sums (2^18 pairs)": lambda: kernels.pair_power_sums(xs, ys, 1.0),
    "shell_pair_powers (2^18 pairs)": lambda: kernels.shell_pair_powers(yx, ux, 0.3, 0.2, yy, uy, 0.3, 0.2, 1.0),
    "disk_block_sums (1000^2 half grid)": lambda: kernels.disk_block_sums(0.5, 0.7, 1.0, 1000, 0.5),
    "square_block_sums (1000^2 half grid)": lambda: kernels.square_block_sums(0.5, 0.7, 1.0, 1000, 0.5),
    "line_block_sums (2^22 half grid)": lambda: kernels.line_block_sums(0, 0.02, 0.0, 0.6, 1 << 22, 0.002),
}
out = {"backend": kernels.backend(), "times": {}}
for name, fn in cases.items():
    fn()  # warm-up (includes JIT compilation)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter(); fn(); best = min(best, time.perf_counter() - t0)
    out["times"][name] = best
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, HWL_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timed repetitions (best is reported)")
    args = parser.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':40s} {fast['backend']:>10s} {slow['backend']:>10s} {'speedup':>8s}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:40s} {t_fast * 1e3:8.2f}ms {t_slow * 1e3:8.2f}ms {t_slow / t_fast:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
