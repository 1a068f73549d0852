"""Time the compiled kernels against the pure-Python ones.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel gets the same
inputs on both backends. The script also checks the outputs agree, so a
speedup never comes from a wrong answer.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from riccilab import _pykernels

try:
    from riccilab import _ckernels
except ImportError:
    _ckernels = None


def _space(n, seed=0):
    p = np.random.default_rng(seed).normal(size=(n, 2))
    return np.linalg.norm(p[:, None] - p[None], axis=2)


def cases():
    grid = np.linspace(0.0, 0.24, 200)
    d40 = _space(40)
    dx, dy = _space(6, 1), _space(6, 2)
    img = np.arange(40)[::-1].copy()
    d40b = d40[np.ix_(img, img)]
    return [
        ("integrate_reaction (2,2,2) to t=0.24",
         lambda k: k.integrate_reaction((2.0, 2.0, 2.0), grid, 1e-10, 1e8, 1e-14),
         lambda a, b: a[0] == b[0] and np.allclose(a[1][:a[0]], b[1][:b[0]], rtol=1e-12)),
        ("integrate_reaction (-1,0,3) to t=0.24",
         lambda k: k.integrate_reaction((-1.0, 0.0, 3.0), grid, 1e-10, 1e8, 1e-14),
         lambda a, b: a[0] == b[0] and np.allclose(a[1][:a[0]], b[1][:b[0]], rtol=1e-12)),
        ("triangle_violations n=40",
         lambda k: k.triangle_violations(d40, 1e-12),
         lambda a, b: list(a) == list(b)),
        ("map_nu n=40",
         lambda k: k.map_nu(d40, d40b, img),
         lambda a, b: np.allclose(a, b, rtol=0, atol=0)),
        ("exhaustive_happrox 6x6",
         lambda k: k.exhaustive_happrox(dx, dy),
         lambda a, b: a[0] == b[0] and a[3] == b[3]),
    ]


def _best(fn, repeat):
    t = timeit.Timer(fn)
    number, _ = t.autorange()
    return min(t.repeat(repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; only the Python timings are shown")
    print(f"{'kernel':40s} {'python':>12s} {'cython':>12s} {'speedup':>9s}  agree")
    for name, call, same in cases():
        tp = _best(lambda: call(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:40s} {tp * 1e3:10.3f}ms")
            continue
        tc = _best(lambda: call(_ckernels), args.repeat)
        agree = same(call(_pykernels), call(_ckernels))
        print(f"{name:40s} {tp * 1e3:10.3f}ms {tc * 1e3:10.3f}ms {tp / tc:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
