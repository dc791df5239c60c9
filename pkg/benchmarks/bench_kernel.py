"""Compiled vs pure-Python stepping kernel.

Times ``advance`` on one mode-1 configuration of the design-point preset, then a
full 100-period simulation under each backend (the latter in a subprocess
with ``HGVM_PURE_PYTHON`` set, since the backend is chosen at import).

    python3 benchmarks/bench_kernel.py [--steps N] [--periods N]
"""

import argparse
import importlib
import os
import subprocess
import sys
import time

import numpy as np

from hgvm_qbc import _kernel_py
from hgvm_qbc.model import DESIGN_POINT
from hgvm_qbc.network import Network, make_config
from hgvm_qbc.simulator import periodic_orbit

SIM_SNIPPET = """
import time
from hgvm_qbc import kernel
from hgvm_qbc.model import DESIGN_POINT
from hgvm_qbc.simulator import SimConfig, simulate
t = time.perf_counter()
simulate(DESIGN_POINT, SimConfig(periods={periods}, record_stride=50))
print(kernel.BACKEND, time.perf_counter() - t)
"""


def time_advance(mod, net, cfg, xe0, steps, repeat=3):
    dt = DESIGN_POINT.ts / 2000
    phi, g, mon = net.phi(cfg, dt), net.event_rows(cfg)[:0], net.monitor_rows(cfg)
    best = np.inf
    for _ in range(repeat):
        xe = xe0.copy()
        rec = np.empty((steps // 50 + 2, 10))
        t = time.perf_counter()
        mod.advance(xe, phi, g, mon, steps, 0.0, dt, 50, 0, rec, 0, np.full(20, -np.inf),
                    np.zeros(10))
        best = min(best, time.perf_counter() - t)
    return best, xe


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--periods", type=int, default=100)
    args = ap.parse_args()

    net = Network(DESIGN_POINT)
    xe0 = np.append(periodic_orbit(DESIGN_POINT).as_array(), 1.0)
    cfg = make_config(True, [False, True, False, False, True, False])
    rows = [("python", *time_advance(_kernel_py, net, cfg, xe0, args.steps))]
    try:
        cy = importlib.import_module("hgvm_qbc._kernel")
        rows.append(("cython", *time_advance(cy, net, cfg, xe0, args.steps)))
    except ImportError:
        print("compiled kernel not built; only the fallback is timed")

    print(f"advance, {args.steps} steps (event checks off):")
    for name, t, _ in rows:
        print(f"  {name:7s} {t * 1e3:9.2f} ms  {t / args.steps * 1e9:8.1f} ns/step")
    if len(rows) == 2:
        print(f"  speedup {rows[0][1] / rows[1][1]:.1f}x, max state difference "
              f"{np.abs(rows[0][2] - rows[1][2]).max():.2e}")

    print(f"simulate, {args.periods} periods:")
    for pure in ("0", "1"):
        env = {**os.environ, "HGVM_PURE_PYTHON": pure}
        out = subprocess.run([sys.executable, "-c", SIM_SNIPPET.format(periods=args.periods)],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:7s} {float(out[1]):9.2f} s")


if __name__ == "__main__":
    main()
