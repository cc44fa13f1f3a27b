#!/usr/bin/env python3
"""Timing comparison of the numba and pure-numpy kernel backends.

Each hot kernel family runs under both backends on identical inputs:

* span harmonics: per-point triangle-fan angular quadrature (psi_for_point)
* ray tracing: boundary-to-boundary quadrature of both data channels
* interior extension: boundary-sum mode tables at mesh centroids

Reported numbers are the best of --repeats runs (first numba call is warmed
up separately so JIT compilation is not billed to the measurement).

Usage:
    python3 benchmarks/bench_backends.py [--repeats 3] [--K 120] [--N 240] ...
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from momenta_vt import forward, pipeline
from momenta_vt.backend import HAS_NUMBA, backend, set_backend
from momenta_vt.geometry import build_circle_grid, build_direction_grid
from momenta_vt.harmonics import ModeTable
from momenta_vt.kernels import extension_table, pack_triangles, psi_for_point
from momenta_vt.phantom import make_phantom


def best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_tasks(args):
    cfg = pipeline.ReconConfig.coarse_preset(
        mesh_diameter=args.diameter, M=args.M, Q_psi=args.Q_psi
    )
    tri = pipeline.make_mesh(cfg)
    pack = pack_triangles(tri)
    points = tri.centroids_c[:: max(1, tri.count // args.points)][: args.points]

    spec = make_phantom("experiment1")
    arc = build_circle_grid(args.K)
    dirs = build_direction_grid(args.N)

    vals = np.zeros((args.K, args.M), complex)
    vals[:, 0] = np.conj(arc.nodes)
    vals[:, 1] = -arc.nodes
    G = ModeTable(values=vals, parity="even", M=args.M, arc=arc)
    # Keep clear of the rim: extension points must stay >1 arc step from nodes.
    interior = tri.centroids_c[np.abs(tri.centroids_c) < 0.85]

    def span_harmonics():
        for c in points:
            psi_for_point(complex(c), pack, args.M, args.Q_psi, "kinksplit")

    def ray_tracing():
        forward.simulate_traces(spec, arc, dirs, q=args.q)

    def interior_extension():
        extension_table(None, G, interior)

    return [
        (f"span harmonics ({len(points)} pts, S={tri.count}, M={args.M}, Q={args.Q_psi})",
         span_harmonics),
        (f"ray tracing ({args.K}x{args.N} rays, q={args.q})", ray_tracing),
        (f"interior extension ({interior.size} pts, M={args.M}, K={args.K})",
         interior_extension),
    ]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3, help="timed repeats per task (best kept)")
    ap.add_argument("--K", type=int, default=120, help="boundary nodes")
    ap.add_argument("--N", type=int, default=240, help="direction nodes")
    ap.add_argument("--q", type=int, default=32, help="ray quadrature order")
    ap.add_argument("--M", type=int, default=32, help="mode truncation")
    ap.add_argument("--Q-psi", dest="Q_psi", type=int, default=512, help="angular quadrature order")
    ap.add_argument("--points", type=int, default=20, help="evaluation points for span harmonics")
    ap.add_argument("--diameter", type=float, default=0.2, help="mesh target diameter")
    args = ap.parse_args()

    tasks = build_tasks(args)
    names = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if not HAS_NUMBA:
        print("numba not importable: timing the numpy path only")

    times: dict[str, dict[str, float]] = {}
    for name in names:
        set_backend(name)
        assert backend() == name
        for label, fn in tasks:
            if name == "numba":
                fn()  # warm-up: JIT compilation happens here, not in the timing
            times.setdefault(label, {})[name] = best_of(fn, args.repeats)

    width = max(len(label) for label, _ in tasks) + 2
    header = f"{'task':<{width}}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, _ in tasks:
        row = f"{label:<{width}}"
        for n in names:
            row += f"{times[label][n]:>11.3f}s"
        if len(names) == 2:
            row += f"{times[label]['numpy'] / times[label]['numba']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
