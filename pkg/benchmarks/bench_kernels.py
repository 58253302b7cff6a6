"""Compare the compiled kernels with the numpy fallback.

Run from the repository root after building the extension::

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is timed on both backends and the outputs are compared.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from flowbox import _kernels_py as py
from flowbox.analytic import PackedPoly
from flowbox.geometry import VectorField

try:
    from flowbox import _ckernels as cy
except ImportError:  # extension not built
    cy = None


def _rotation_shear():
    V = ("x", "y", "z", "w")
    f = VectorField.parse(["-y", "x", "0", "y^2"], V)
    return PackedPoly.from_polynomials(f.components, 4)


def _two_generators():
    V = ("x", "y", "z")
    g1 = VectorField.parse(["1", "0", "-1/2*y"], V)
    g2 = VectorField.parse(["0", "1", "1/2*x"], V)
    return PackedPoly.stack([PackedPoly.from_polynomials(g.components, 3) for g in (g1, g2)])


def _best(fn, repeat):
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(repeat: int = 5):
    rows = []
    pk = _rotation_shear()
    X = np.random.default_rng(0).uniform(-1, 1, size=(20000, 4))
    y0 = np.array([0.5, 0.0, 0.0, 0.0])
    lo = np.full(4, -np.inf)
    hi = np.full(4, np.inf)
    g = _two_generators()
    U = np.random.default_rng(1).normal(size=(256, 8, 2))

    cases = {
        "poly_eval_batch 20k x 4": lambda m: m.poly_eval_batch(pk.exps, pk.coef, pk.comp, 4, X),
        "dopri5_poly t=50": lambda m: m.dopri5_poly(pk.exps, pk.coef, pk.comp, y0, 0.0, 50.0, 1e-10, 1e-12, 0.0, math.inf, 10**6, lo, hi)[1][-1],
        "shoot_batch 256 x 8 x 8": lambda m: m.shoot_batch(g.exps, g.coef, g.comp, 2, np.zeros(3), U, 0.125, 8)[0],
    }
    for name, fn in cases.items():
        tp, op = _best(lambda: fn(py), repeat)
        if cy is None:
            rows.append((name, tp, None, None))
            continue
        tc, oc = _best(lambda: fn(cy), repeat)
        rows.append((name, tp, tc, float(np.max(np.abs(np.asarray(op) - np.asarray(oc))))))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rows = bench(args.repeat)
    print(f"{'kernel':28s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, tp, tc, diff in rows:
        if tc is None:
            print(f"{name:28s} {tp:11.4f} {'n/a':>11s}")
        else:
            print(f"{name:28s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
