"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on inputs shaped like the real workload: 7-channel Rips
complexes (and a larger 20-point one for the column reduction) and
6-bar H0 diagrams sampled on the default 256-point grid.
"""

import argparse
import itertools
import timeit

import numpy as np

from sleeptda import kernels
from sleeptda.landscape import make_grid


def rips_inputs(n, rng):
    d = np.triu(rng.random((n, n)), 1)
    iu, ju = np.triu_indices(n, 1)
    order = np.lexsort((ju, iu, d[iu, ju]))
    eu, ev = iu[order].astype(np.int64), ju[order].astype(np.int64)
    eid = np.full((n, n), -1, dtype=np.int64)
    eid[eu, ev] = eid[ev, eu] = np.arange(len(eu))
    tri = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
    w = d + d.T
    tval = np.max([w[tri[:, 0], tri[:, 1]], w[tri[:, 0], tri[:, 2]], w[tri[:, 1], tri[:, 2]]], axis=0)
    tri = tri[np.argsort(tval, kind="stable")]
    faces = np.stack([eid[tri[:, 0], tri[:, 1]], eid[tri[:, 0], tri[:, 2]],
                      eid[tri[:, 1], tri[:, 2]]], axis=1)
    return eu, ev, np.ascontiguousarray(faces)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    eu7, ev7, faces7 = rips_inputs(7, rng)
    eu20, ev20, faces20 = rips_inputs(20, rng)
    grid = make_grid()
    deaths = np.sort(rng.uniform(0, 1, 6))
    births = np.zeros(6)

    cases = {
        "h0_merges n=7": lambda m: m.h0_merges(7, eu7, ev7),
        "reduce_columns n=7": lambda m: m.reduce_columns(len(eu7), faces7),
        "reduce_columns n=20": lambda m: m.reduce_columns(len(eu20), faces20),
        "landscape_levels 6 bars": lambda m: m.landscape_levels(births, deaths, grid, 6),
    }
    backends = kernels.available_backends()
    print(f"selected backend: {kernels.BACKEND}")
    print(f"{'kernel':26s}" + "".join(f"{name:>14s}" for name in backends) + "   speedup")
    for label, fn in cases.items():
        times = {}
        for name, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            n, _ = timer.autorange()
            times[name] = min(timer.repeat(args.repeat, n)) / n
        row = f"{label:26s}" + "".join(f"{times[n] * 1e6:11.1f} us" for n in backends)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:6.1f}x"
        print(row)


if __name__ == "__main__":
    main()
