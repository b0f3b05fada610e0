#!/usr/bin/env python3
"""Kernel throughput: numba backend vs the pure-numpy fallback.

Times the per-pixel hot kernels on 448x448 tiles, reports tiles/s per
backend, cross-checks the two backends' outputs, and measures thread
scaling of the batch transform path (the numba kernels release the GIL).

Run:  python3 benchmarks/bench_kernels.py [--tiles N] [--repeats R]
"""

import argparse
import os
import time

import numpy as np

from stainkit import _kernels
from stainkit.estimation import estimate_profile
from stainkit.rng import substream
from stainkit.simulation import plan_conditions, simulate_tiles
from stainkit.synth import random_basis, synthetic_tile


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tiles", type=int, default=20, help="tiles per measurement")
    parser.add_argument("--repeats", type=int, default=3, help="repeats (best-of)")
    args = parser.parse_args()

    rng = substream(0, "bench")
    basis = random_basis(rng)
    tiles = [synthetic_tile(rng, basis, 448, 448)[0] for _ in range(args.tiles)]
    flats = [np.ascontiguousarray(t.reshape(-1, 3)) for t in tiles]
    inv = basis.inverse
    mix = basis.matrix
    scales = np.array([1.7, 0.6, 0.01])
    n_px = flats[0].shape[0]

    backends = {"numpy": {
        "rgb_to_od": _kernels.rgb_to_od_numpy,
        "decompose": _kernels.decompose_numpy,
        "transform": _kernels.transform_numpy,
    }}
    if _kernels.HAVE_NUMBA:
        backends["numba"] = {
            "rgb_to_od": _kernels.rgb_to_od_numba,
            "decompose": _kernels.decompose_numba,
            "transform": _kernels.transform_numba,
        }
        _kernels.warmup()

    print(f"active backend: {_kernels.active_backend()}  "
          f"({args.tiles} tiles of 448x448 = {n_px} px, best of {args.repeats})\n")
    print(f"{'kernel':<12}" + "".join(f"{b:>16}" for b in backends) +
          ("{:>12}".format("speedup") if len(backends) == 2 else ""))

    rates = {}
    for name in ("rgb_to_od", "decompose", "transform"):
        row = f"{name:<12}"
        per_backend = []
        for bname, fns in backends.items():
            fn = fns[name]
            if name == "rgb_to_od":
                run = lambda: [fn(f, 255.0) for f in flats]
            elif name == "decompose":
                run = lambda: [fn(f, inv, 255.0) for f in flats]
            else:
                run = lambda: [fn(f, inv, mix, scales, 255.0) for f in flats]
            run()  # warm
            rate = args.tiles / time_fn(run, args.repeats)
            per_backend.append(rate)
            row += f"{rate:>12.1f} t/s"
        if len(per_backend) == 2:
            row += f"{per_backend[1] / per_backend[0]:>11.2f}x"
        rates[name] = per_backend
        print(row)

    if _kernels.HAVE_NUMBA:
        got = _kernels.transform_numba(flats[0], inv, mix, scales, 255.0).astype(int)
        want = _kernels.transform_numpy(flats[0], inv, mix, scales, 255.0).astype(int)
        print(f"\ncross-backend max channel deviation: {np.max(np.abs(got - want))} count(s)")

    print(f"\nbatch-path thread scaling (cpu_count={os.cpu_count()}):")
    source = estimate_profile(tiles[0], source_id="bench")
    from stainkit.estimation import StainProfile
    from stainkit.profiling import build_library

    entries = {
        "lo": [StainProfile(basis=basis, intensity_h=0.68, intensity_e=0.63, source_id="lo")],
        "hi": [StainProfile(basis=basis, intensity_h=3.22, intensity_e=2.02, source_id="hi")],
    }
    library = build_library(entries)
    cond = plan_conditions(source, library)[2]
    t_base = None
    for workers in (1, 2, 4, 8):
        simulate_tiles(tiles[:2], source.basis, cond, workers=workers)  # warm pool
        dt = time_fn(lambda: simulate_tiles(tiles, source.basis, cond, workers=workers),
                     args.repeats)
        t_base = t_base or dt
        print(f"  {workers} worker(s): {args.tiles / dt:>8.1f} t/s   speedup {t_base / dt:.2f}x")


if __name__ == "__main__":
    main()
