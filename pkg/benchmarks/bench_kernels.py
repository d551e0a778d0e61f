"""Time the compiled and pure-Python kernel backends on realistic workloads.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each workload is run on every available backend; the table reports the best
of ``--repeat`` runs and the speedup relative to the Python fallback. Outputs
of the two backends are compared so a fast but wrong kernel is caught.
"""
import argparse
import json
import math
import timeit

import numpy as np

from trapdamp import _kernels
from trapdamp.circuit import R_LOSS_DEFAULT
from trapdamp.quantum import _initial_and_uniforms

TANK = (8.2e-12, 55e-9, 15e-9, R_LOSS_DEFAULT, 0.0)


def _switch_args():
    ct = np.geomspace(1e-12, 200e-12, 200)
    return (*TANK, ct, 65e3, 9.6, 1.8e-12, math.nan)


def _rk4_args():
    omega = 2 * math.pi * 1e6
    dt = 2 * math.pi / omega / 64
    return (0.0, 0.0, omega, 2e4, 1.0, omega, dt, 32_000)


def _jump_args():
    rows = [_initial_and_uniforms(1, i, 10.0, 40_000, None, 64) for i in range(64)]
    n0 = np.array([r[0] for r in rows], dtype=np.int64)
    u = np.stack([r[1] for r in rows])
    return (n0, u, 2 * math.pi * 1.0, 10.0, 4.0, 42.0, 1 / 128, 1024)


WORKLOADS = {
    "switch_model (200 c_tuning, tracked f)": ("switch_model", _switch_args),
    "rk4_driven (32k steps)": ("rk4_driven", _rk4_args),
    "jump_phase_batch (64 traj x 8 s)": ("jump_phase_batch", _jump_args),
}


def _max_diff(a, b):
    """Largest difference between matching outputs, relative to each output's peak magnitude."""
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    worst = 0.0
    for x, y in zip(a, b):
        x, y = np.asarray(x), np.asarray(y)
        peak = max(float(np.max(np.abs(x))), 1e-300)
        worst = max(worst, float(np.max(np.abs(x - y))) / peak)
    return worst


def bench(repeat: int) -> list[dict]:
    backends = _kernels.available_backends()
    rows = []
    for label, (name, make_args) in WORKLOADS.items():
        args = make_args()
        times, outputs = {}, {}
        for backend in backends:
            func = getattr(_kernels.get_backend(backend), name)
            outputs[backend] = func(*args)
            if name == "jump_phase_batch" and np.any(outputs[backend][2] < 0):
                raise RuntimeError("benchmark ran out of uniforms; enlarge the pool")
            times[backend] = min(timeit.repeat(lambda: func(*args), number=1, repeat=repeat))
        row = {"workload": label, "seconds": times}
        if "cython" in times:
            row["speedup"] = times["python"] / times["cython"]
            row["max_rel_diff"] = _max_diff(outputs["python"], outputs["cython"])
        rows.append(row)
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats per backend (best is kept)")
    parser.add_argument("--json", help="also write the results to this JSON file")
    args = parser.parse_args()
    rows = bench(args.repeat)
    print(f"backends: {', '.join(_kernels.available_backends())}")
    print(f"{'workload':42s} {'python':>10s} {'cython':>10s} {'speedup':>8s} {'max rel diff':>13s}")
    for r in rows:
        py = r["seconds"]["python"]
        cy = r["seconds"].get("cython", float("nan"))
        print(f"{r['workload']:42s} {py * 1e3:8.2f}ms {cy * 1e3:8.2f}ms "
              f"{r.get('speedup', float('nan')):7.1f}x {r.get('max_rel_diff', float('nan')):13.2e}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
