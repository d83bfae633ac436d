"""Compiled vs pure-Python association kernels.

    python bench/benchmark_kernels.py [--repeat N]

Times ``enumerate_injective`` and ``mta_log_scores`` for growing label and
measurement counts, then one end-to-end filter run under each backend.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from slcglmb import _kernels_py
from slcglmb import kernels

try:
    from slcglmb import _kernels
except ImportError:
    _kernels = None

SIZES = [(2, 4), (3, 6), (4, 6), (4, 8), (5, 8)]

END_TO_END = (
    "import time; from slcglmb.sim import *; from slcglmb import kernels;"
    "cfg = load_config('{cfg}'); scans = generate_scenario(cfg); t = time.perf_counter();"
    "run_filter(cfg, scans, 'slc'); print(kernels.BACKEND, time.perf_counter() - t)"
)


def bench(mod, n, m, repeat):
    rng = np.random.default_rng(0)
    table = rng.normal(size=(n, m + 1))
    t_enum = min(timeit.repeat(lambda: mod.enumerate_injective(n, m), number=1, repeat=repeat))
    mtas = mod.enumerate_injective(n, m)
    t_score = min(timeit.repeat(lambda: mod.mta_log_scores(table, mtas), number=1, repeat=repeat))
    return t_enum, t_score, len(mtas)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    print(f"{'|L|':>3} {'m':>3} {'maps':>8} {'enum py':>10} {'enum cy':>10} {'score py':>10} {'score cy':>10}")
    for n, m in SIZES:
        py = bench(_kernels_py, n, m, args.repeat)
        cy = bench(_kernels, n, m, args.repeat) if _kernels else (float("nan"),) * 2 + (py[2],)
        print(f"{n:>3} {m:>3} {py[2]:>8} {py[0]:>10.2e} {cy[0]:>10.2e} {py[1]:>10.2e} {cy[1]:>10.2e}")

    cfg = os.path.join(os.path.dirname(kernels.__file__), "scenarios", "cluster.toml")
    for pure in ("0", "1"):
        env = dict(os.environ, SLCGLMB_PURE_PYTHON=pure)
        res = subprocess.run([sys.executable, "-c", END_TO_END.format(cfg=cfg)], env=env, capture_output=True, text=True)
        print("end-to-end", res.stdout.strip() or res.stderr.strip())


if __name__ == "__main__":
    main()
