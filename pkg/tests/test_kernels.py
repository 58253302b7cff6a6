import math
import os
import subprocess
import sys

import numpy as np
import pytest

from flowbox import _kernels_py as py
from flowbox import kernels
from flowbox.analytic import PackedPoly
from flowbox.geometry import VectorField

try:
    from flowbox import _ckernels as cy
except ImportError:  # extension not built
    cy = None

needs_cy = pytest.mark.skipif(cy is None, reason="compiled extension not built")

V4 = ("x", "y", "z", "w")


def packed(comps, V):
    return PackedPoly.from_polynomials(VectorField.parse(comps, V).components, len(V))


ROT = packed(["-y", "x", "0", "y^2"], V4)
HEIS = PackedPoly.stack(
    [packed(["1", "0", "-1/2*y"], ("x", "y", "z")), packed(["0", "1", "1/2*x"], ("x", "y", "z"))]
)
NOBOX = (np.full(4, -np.inf), np.full(4, np.inf))


def test_backend_names():
    assert kernels.BACKEND in ("python", "cython")
    assert py.BACKEND == "python"
    if cy is not None and not os.environ.get("FLOWBOX_PURE_PYTHON"):
        assert kernels.BACKEND == "cython"


def test_poly_eval_python():
    x = np.array([0.5, -0.25, 2.0, 3.0])
    assert np.allclose(py.poly_eval(ROT.exps, ROT.coef, ROT.comp, 4, x), [0.25, 0.5, 0.0, 0.0625])


def test_dopri5_callable_matches_closed_form():
    ts, ys, fs, errs, status = py.dopri5(lambda t, y: np.array([-y[1], y[0]]), np.array([1.0, 0.0]), 0.0, math.pi, 1e-12, 1e-14)
    assert status == py.OK
    assert ts[-1] == pytest.approx(math.pi)
    assert np.allclose(ys[-1], [-1.0, 0.0], atol=1e-9)


def test_max_steps_status():
    *_, status = py.dopri5(lambda t, y: np.array([-y[1], y[0]]), np.array([1.0, 0.0]), 0.0, 100.0, 1e-12, 1e-14, max_steps=5)
    assert status == py.MAX_STEPS


@needs_cy
class TestParity:
    def test_poly_eval_batch(self):
        X = np.random.default_rng(0).uniform(-1, 1, (500, 4))
        a = py.poly_eval_batch(ROT.exps, ROT.coef, ROT.comp, 4, X)
        b = cy.poly_eval_batch(ROT.exps, ROT.coef, ROT.comp, 4, X)
        assert np.max(np.abs(a - b)) < 1e-14

    def test_poly_eval(self):
        x = np.array([0.3, -0.2, 0.1, 0.9])
        assert np.allclose(py.poly_eval(ROT.exps, ROT.coef, ROT.comp, 4, x), cy.poly_eval(ROT.exps, ROT.coef, ROT.comp, 4, x), atol=1e-15)

    def test_dopri5_poly(self):
        y0 = np.array([0.5, 0.0, 0.0, 0.0])
        args = (ROT.exps, ROT.coef, ROT.comp, y0, 0.0, 10.0, 1e-10, 1e-12, 0.0, math.inf, 10**5, *NOBOX)
        ta, ya, *_, sa = py.dopri5_poly(*args)
        tb, yb, *_, sb = cy.dopri5_poly(*args)
        assert sa == sb == kernels.OK
        # same controller; summation order perturbs step sizes at roundoff level
        assert len(ta) == len(tb)
        assert np.max(np.abs(ta - tb)) < 1e-8
        assert np.max(np.abs(ya - yb)) < 1e-8
        assert np.max(np.abs(ya[-1] - yb[-1])) < 1e-12

    def test_domain_exit(self):
        lo, hi = np.full(4, -1.0), np.full(4, 1.0)
        const = packed(["1", "0", "0", "0"], V4)
        for m in (py, cy):
            ts, ys, *_, status = m.dopri5_poly(const.exps, const.coef, const.comp, np.zeros(4), 0.0, 5.0, 1e-10, 1e-12, 0.0, math.inf, 10**5, lo, hi)
            assert status == kernels.DOMAIN_EXIT
            assert ys[-1][0] <= 1.0

    def test_shoot_batch(self):
        U = np.random.default_rng(1).normal(size=(32, 8, 2))
        xa, pa = py.shoot_batch(HEIS.exps, HEIS.coef, HEIS.comp, 2, np.zeros(3), U, 0.125, 8, True)
        xb, pb = cy.shoot_batch(HEIS.exps, HEIS.coef, HEIS.comp, 2, np.zeros(3), U, 0.125, 8, True)
        assert np.max(np.abs(xa - xb)) < 1e-13
        assert np.max(np.abs(np.asarray(pa) - np.asarray(pb))) < 1e-13


def test_shoot_matches_callable():
    U = np.random.default_rng(2).normal(size=(4, 5, 2))

    def ev(X):
        out = py.poly_eval_batch(HEIS.exps, HEIS.coef, HEIS.comp, HEIS.nout, X)
        return out

    xa, _ = py.shoot_batch(HEIS.exps, HEIS.coef, HEIS.comp, 2, np.zeros(3), U, 0.2, 8)
    xb, _ = py.shoot_batch_callable(ev, 2, np.zeros(3), U, 0.2, 8)
    assert np.max(np.abs(xa - xb)) < 1e-13


def test_shoot_heisenberg_area():
    # a closed unit square in (x, y) lifts to a z-gap equal to its area
    U = np.array([[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]])
    x, _ = kernels.shoot_batch(HEIS.exps, HEIS.coef, HEIS.comp, 2, np.zeros(3), U, 1.0, 16)
    assert np.allclose(x[0], [0.0, 0.0, 1.0], atol=1e-12)


def test_pure_python_switch():
    code = "from flowbox import kernels, BACKEND; print(kernels.BACKEND, BACKEND)"
    env = dict(os.environ, FLOWBOX_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "python"]
