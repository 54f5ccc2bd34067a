"""Compare the compiled and pure-Python lattice kernels.

Run ``python benchmarks/bench_lattice.py`` after an editable install. Each
case enumerates every partition of ``d`` nodes and keeps those whose
quotient of a random DAG is acyclic.
"""

import argparse
import time

import numpy as np

from coarse_causal import kernels
from coarse_causal.coarsening import _bell, _edge_arrays
from coarse_causal.scm import sample_er_dag


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", nargs="+", type=int, default=[6, 7, 8, 9])
    ap.add_argument("--density", type=float, default=0.3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    names = sorted(kernels.BACKENDS)
    print(f"{'d':>3} {'valid':>8} " + " ".join(f"{n + ' [s]':>12}" for n in names) + f" {'speedup':>8}")
    for d in args.d:
        eu, ev = _edge_arrays(sample_er_dag(d, args.density, rng=d))
        res = {}
        for name in names:
            mod = kernels.BACKENDS[name]
            res[name] = best_of(lambda: mod.partition_labels(d, eu, ev, capacity=_bell(d)), args.repeat)
        counts = {len(out) for _, out in res.values()}
        assert len(counts) == 1, "backends disagree"
        if len(names) > 1:
            assert np.array_equal(res["cython"][1], res["python"][1])
            speed = f"{res['python'][0] / res['cython'][0]:8.1f}x"
        else:
            speed = "     n/a"
        print(f"{d:>3} {counts.pop():>8} " + " ".join(f"{res[n][0]:>12.4f}" for n in names) + f" {speed}")


if __name__ == "__main__":
    main()
