"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--h 0.015625] [--repeat 5]

Prints the best time per call for each kernel on both backends and the
largest difference between their outputs.
"""

import argparse
import time

import numpy as np

from pqlimit import build_domain, parse_shape
from pqlimit import _kernels_py as py
from pqlimit import kernels


def best_time(fn, repeat, number):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--h", type=float, default=1 / 64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if kernels.BACKEND == "python":
        print("compiled extension not available; only the numpy backend can be timed")
    dom = build_domain(parse_shape("disk:1"), args.h)
    rng = np.random.default_rng(0)
    u = np.where(dom.interior, rng.random(dom.n), 0.0)
    free = dom.interior.astype(np.uint8)
    cells = 2 * dom.mesh.ix1.size if hasattr(dom.mesh, "ix1") else dom.n
    x = rng.random(cells) + 1e-3
    w = rng.random(cells)

    cases = [
        ("ratio_powers", lambda m: (lambda: m.ratio_powers(x, w, 1.0, 32.0, 16.0)), 50),
        ("midrange_sweep", lambda m: (lambda: m.midrange_sweep(u, free, dom.nx, dom.ny)), 50),
        ("midrange_sweep_weighted", lambda m: (lambda: m.midrange_sweep_weighted(u, free, dom.nx, dom.ny)), 20),
    ]
    print(f"disk h={args.h:g}: {dom.n} nodes, {cells} power-sum terms, backend {kernels.BACKEND}")
    print(f"{'kernel':<26}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>10}{'max diff':>12}")
    for name, make, number in cases:
        tp = best_time(make(py), args.repeat, number)
        if kernels.BACKEND == "python":
            print(f"{name:<26}{tp * 1e3:>12.3f}{'-':>15}{'-':>10}{'-':>12}")
            continue
        tc = best_time(make(kernels), args.repeat, number)
        a, b = make(py)(), make(kernels)()
        diff = max(float(np.max(np.abs(np.asarray(ai, dtype=float) - np.asarray(bi, dtype=float))))
                   for ai, bi in zip(a, b) if ai is not None)
        print(f"{name:<26}{tp * 1e3:>12.3f}{tc * 1e3:>15.3f}{tp / tc:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
