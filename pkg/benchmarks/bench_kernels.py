"""Compare the compiled scanner kernel with the numpy fallback.

Two measurements:

* ``advance`` alone on one level of real frontier data,
* a whole ``scan(K)`` with each backend swapped in.

Both backends must produce identical numbers; the script checks that
before reporting times.

    python3 benchmarks/bench_kernels.py --max 1000000 --repeat 3
"""

import argparse
import json
import sys
import time

import numpy as np

from cusickwalk import kernels, scanner


def _frontier(level: int, width: int):
    """Pairs for the whole of ``level``, grown from the root with the numpy kernel."""
    store = scanner.LevelStore.root(width, np.int64)
    while store.level < level:
        rows = store.A.shape[0]
        _, _, store = scanner._step(store, rows, True)
    return store


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_advance(level: int, repeat: int) -> dict:
    width = 2 * level + 3
    store = _frontier(level, width)
    rows = store.A.shape[0]
    out = {}
    results = {}
    impls = {"python": kernels.python_advance}
    if kernels.BACKEND == "cython":
        impls["cython"] = kernels.advance
    for name, fn in impls.items():
        V = np.empty(rows, np.int64)
        var = np.empty(rows, np.int64)
        mean = np.empty(rows, np.int64)
        An = np.empty((2 * rows, width), np.int64)
        Bn = np.empty((2 * rows, width), np.int64)

        def run():
            fn(store.A, store.B, V, var, mean, rows, store.center, An, Bn)

        out[name] = _time(run, repeat)
        results[name] = (V.copy(), var.copy(), An.copy(), Bn.copy())
    if "cython" in results:
        same = all(np.array_equal(a, b) for a, b in zip(results["python"], results["cython"]))
        if not same:
            sys.exit("backends disagree on advance()")
    return {"level": level, "rows": rows, "seconds": out}


def bench_scan(K: int, repeat: int) -> dict:
    saved = kernels.advance, kernels.BACKEND
    out = {}
    minima = {}
    try:
        impls = [("python", kernels.python_advance)]
        if saved[1] == "cython":
            impls.append(("cython", saved[0]))
        for name, fn in impls:
            kernels.advance, kernels.BACKEND = fn, name
            res = None

            def run():
                nonlocal res
                res = scanner.scan(K, scanner.ScanOptions(workers=1))

            out[name] = _time(run, repeat)
            minima[name] = res.minimizers()
    finally:
        kernels.advance, kernels.BACKEND = saved
    if len({tuple(m) for m in minima.values()}) != 1:
        sys.exit("backends disagree on the minimizer list")
    return {"K": K, "seconds": out}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max", type=int, default=1 << 20, help="scan bound K")
    ap.add_argument("--level", type=int, default=18, help="frontier level for the kernel-only timing")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    report = {
        "compiled_available": kernels.BACKEND == "cython",
        "advance": bench_advance(args.level, args.repeat),
        "scan": bench_scan(args.max, args.repeat),
    }
    for part in ("advance", "scan"):
        s = report[part]["seconds"]
        if "cython" in s:
            report[part]["speedup"] = round(s["python"] / s["cython"], 2)
    print(json.dumps(report, indent=1))


if __name__ == "__main__":
    main()
