"""Compare the compiled and pure-Python element partition kernels.

Usage: python benchmarks/bench_kernels.py [--n 64] [--k 3] [--repeat 3]
"""
import argparse
import time

import numpy as np

from curveflow import _kernels_py
from curveflow.field import Shape, smooth_initial_field
from curveflow.mesh import build_structured_mesh
from curveflow.simplex import reference_vectors

try:
    from curveflow import _kernels
except ImportError:
    _kernels = None


def workload(n, k, seed=0):
    """Element coordinates and nodal scores of a random multi-disk field."""
    rng = np.random.default_rng(seed)
    mesh = build_structured_mesh(n + 1, n + 1)
    frame = reference_vectors(k)
    shapes = [Shape("disk", (*rng.uniform(0.25, 0.75, 2), rng.uniform(0.1, 0.25)), i % (k - 1))
              for i in range(2 * k)]
    u = smooth_initial_field(mesh, frame, shapes, k - 1)
    sc = u.scores()
    return mesh.nodes[mesh.elements], sc[mesh.elements]


def best_of(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled kernel not built; run `pip install --no-build-isolation -e .` first")
    print(f"{'cells':>6} {'elements':>9} {'python s':>10} {'cython s':>10} {'speedup':>8}  agree")
    for n in args.n:
        xy, sc = workload(n, args.k)
        tp = best_of(_kernels_py.partition_elements, (xy, sc), args.repeat)
        if _kernels is None:
            print(f"{n:>6} {len(xy):>9} {tp:>10.4f} {'-':>10} {'-':>8}")
            continue
        tc = best_of(_kernels.partition_elements, (xy, sc), args.repeat)
        a = _kernels_py.partition_elements(xy, sc)
        b = _kernels.partition_elements(xy, sc)
        agree = np.allclose(a[3], b[3], atol=1e-14) and np.array_equal(a[0], b[0])
        print(f"{n:>6} {len(xy):>9} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f}  {agree}")


if __name__ == "__main__":
    main()
