"""Benchmark the hot qubit kernels: numba JIT vs the pure-numpy fallback.

Runs each workload twice in subprocesses, once normally and once with
HOLEVO_LAB_NO_NUMBA=1, and prints a comparison table.

    python3 benchmarks/bench_kernels.py [--sizes 2048,8192,32768]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, sys, time
import numpy as np
from holevo_lab import _kernels
from holevo_lab.capacity import brute_force_capacity
from holevo_lab.channels import random_channel

sizes = json.loads(sys.argv[1])
rng = np.random.default_rng(0)
results = {"numba": _kernels.USE_NUMBA, "rows": []}

for n in sizes:
    a = _kernels.fibonacci_sphere(n)
    b = rng.standard_normal((128, 3))
    b *= rng.uniform(0, 0.95, (128, 1)) / np.linalg.norm(b, axis=1, keepdims=True)
    _kernels.relent_pairwise(a[:16], b[:4])  # warm the JIT
    t0 = time.perf_counter()
    _kernels.relent_pairwise(a, b)
    t_pair = time.perf_counter() - t0
    t0 = time.perf_counter()
    for _ in range(20):
        _kernels.entropy_from_radius(np.linalg.norm(a, axis=1))
    t_ent = (time.perf_counter() - t0) / 20
    results["rows"].append({"n": n, "pairwise_s": t_pair, "entropy_s": t_ent})

ch = random_channel(np.random.default_rng(3), 2, 2, 3)
t0 = time.perf_counter()
lo, up = brute_force_capacity(ch, resolution=16384)
results["brute_force_s"] = time.perf_counter() - t0
results["bracket_width"] = up - lo
print(json.dumps(results))
"""


def run(sizes, no_numba):
    env = dict(os.environ)
    if no_numba:
        env["HOLEVO_LAB_NO_NUMBA"] = "1"
    else:
        env.pop("HOLEVO_LAB_NO_NUMBA", None)
    out = subprocess.run([sys.executable, "-c", WORKER, json.dumps(sizes)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="2048,8192,32768")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    jit = run(sizes, no_numba=False)
    plain = run(sizes, no_numba=True)
    if not jit["numba"]:
        print("note: numba unavailable; both runs use the numpy path")

    print(f"{'grid':>8} {'pairwise jit':>14} {'pairwise numpy':>15} "
          f"{'speedup':>8} {'entropy jit':>12} {'entropy numpy':>14}")
    for row_j, row_p in zip(jit["rows"], plain["rows"]):
        speed = row_p["pairwise_s"] / max(row_j["pairwise_s"], 1e-12)
        print(f"{row_j['n']:>8} {row_j['pairwise_s']:>13.4f}s "
              f"{row_p['pairwise_s']:>14.4f}s {speed:>7.1f}x "
              f"{row_j['entropy_s']:>11.5f}s {row_p['entropy_s']:>13.5f}s")
    print(f"\nbrute-force capacity (16384-point grid): "
          f"jit {jit['brute_force_s']:.2f}s vs numpy {plain['brute_force_s']:.2f}s; "
          f"bracket width {jit['bracket_width']:.2e}")


if __name__ == "__main__":
    main()
