"""Pure-Python/numpy numeric kernels.

Packed polynomial families use three flat arrays: ``exps`` (nterms, dim)
int64, ``coef`` (nterms,) float64 and ``comp`` (nterms,) int64 giving the
output slot of each term.  The compiled module exposes the same functions
with the same signatures.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# status codes shared with the compiled core
OK, DOMAIN_EXIT, STEP_UNDERFLOW, MAX_STEPS = 0, 1, 2, 3

# Dormand-Prince 5(4)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_BHAT = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _BHAT


def poly_eval(exps, coef, comp, nout, x):
    """Evaluate a packed family at one point; returns shape ``(nout,)``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(nout)
    if len(coef):
        vals = coef * np.prod(x[None, :] ** exps, axis=1)
        np.add.at(out, comp, vals)
    return out


def poly_eval_batch(exps, coef, comp, nout, X):
    """Evaluate at each row of ``X``; returns shape ``(N, nout)``."""
    X = np.asarray(X, dtype=float)
    out = np.zeros((X.shape[0], nout))
    if len(coef):
        mono = np.prod(X[:, None, :] ** exps[None, :, :], axis=2) * coef[None, :]
        for k in range(nout):
            sel = comp == k
            if np.any(sel):
                out[:, k] = mono[:, sel].sum(axis=1)
    return out


def _initial_step(f, t0, y0, f0, rtol, atol, direction=1.0):
    # Hairer-Norsett-Wanner starting step heuristic
    sc = atol + rtol * np.abs(y0)
    d0 = np.max(np.abs(y0) / sc)
    d1 = np.max(np.abs(f0) / sc)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.max(np.abs(f1 - f0) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def dopri5(f, y0, t0, t1, rtol, atol, h0=0.0, hmax=math.inf, max_steps=100000, lo=None, hi=None):
    """Adaptive Dormand-Prince integration of ``y' = f(t, y)`` with ``t1 > t0``.

    Returns ``(ts, ys, fs, errs, status)`` where ``fs`` holds the field at
    every accepted node (for Hermite dense output) and ``errs`` the scaled
    local error estimate of the step ending at that node (0 for the first).
    """
    y = np.array(y0, dtype=float)
    dim = y.size
    lo = np.full(dim, -np.inf) if lo is None else np.asarray(lo, dtype=float)
    hi = np.full(dim, np.inf) if hi is None else np.asarray(hi, dtype=float)
    t = float(t0)
    fy = np.asarray(f(t, y), dtype=float)
    ts, ys, fs, errs = [t], [y.copy()], [fy.copy()], [0.0]
    span = t1 - t0
    if span <= 0.0:
        return np.array(ts), np.array(ys), np.array(fs), np.array(errs), OK
    h = h0 if h0 > 0 else _initial_step(f, t, y, fy, rtol, atol)
    h = min(h, hmax, span)
    k = np.empty((7, dim))
    status = OK
    steps = 0
    while t < t1:
        if steps >= max_steps:
            status = MAX_STEPS
            break
        if h < 1e-14 * max(1.0, abs(t)):
            status = STEP_UNDERFLOW
            break
        last = t + h >= t1
        if last:
            h = t1 - t
        k[0] = fy
        for i in range(1, 7):
            yi = y + h * (np.asarray(_A[i]) @ k[:i])
            k[i] = f(t + _C[i] * h, yi)
        ynew = y + h * (_B @ k)
        errv = h * (_E @ k)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = float(np.max(np.abs(errv) / sc)) if dim else 0.0
        if not np.all(np.isfinite(ynew)):
            err = math.inf
        if err <= 1.0:
            tnew = t1 if last else t + h
            if np.any(ynew < lo) or np.any(ynew > hi):
                status = DOMAIN_EXIT
                break
            t, y, fy = tnew, ynew, k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(fy.copy())
            errs.append(err)
            steps += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        else:
            fac = 0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2)
        h = min(h * fac, hmax)
    return np.array(ts), np.array(ys).reshape(-1, dim), np.array(fs).reshape(-1, dim), np.array(errs), status


def dopri5_poly(exps, coef, comp, y0, t0, t1, rtol, atol, h0, hmax, max_steps, lo, hi):
    """:func:`dopri5` for an autonomous packed polynomial field."""
    nout = len(y0)

    def f(_t, y):
        return poly_eval(exps, coef, comp, nout, y)

    return dopri5(f, y0, t0, t1, rtol, atol, h0, hmax, max_steps, lo, hi)


def shoot_batch_callable(gens_eval, ngen, p0, U, dt, substeps, keep_path=False):
    """RK4 flow of ``x' = sum_g u_g V_g(x)`` under piecewise-constant controls.

    ``gens_eval(X)`` maps an ``(B, dim)`` batch to ``(B, ngen*dim)`` with
    generator ``g`` occupying slots ``g*dim .. g*dim+dim-1``.  ``U`` has
    shape ``(B, nsteps, ngen)``.
    """
    U = np.asarray(U, dtype=float)
    B, nsteps, _ = U.shape
    p0 = np.asarray(p0, dtype=float)
    dim = p0.size
    X = np.tile(p0, (B, 1))
    hs = dt / substeps
    path = np.empty((B, nsteps * substeps + 1, dim)) if keep_path else None
    if keep_path:
        path[:, 0] = X

    def rhs(Z, u):
        G = gens_eval(Z).reshape(B, ngen, dim)
        return np.einsum("bg,bgd->bd", u, G)

    idx = 1
    for s in range(nsteps):
        u = U[:, s, :]
        for _ in range(substeps):
            k1 = rhs(X, u)
            k2 = rhs(X + 0.5 * hs * k1, u)
            k3 = rhs(X + 0.5 * hs * k2, u)
            k4 = rhs(X + hs * k3, u)
            X = X + hs / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if keep_path:
                path[:, idx] = X
                idx += 1
    return X, path


def shoot_batch(exps, coef, comp, ngen, p0, U, dt, substeps, keep_path=False):
    """:func:`shoot_batch_callable` for packed polynomial generators."""
    nout = ngen * len(p0)

    def gens_eval(X):
        return poly_eval_batch(exps, coef, comp, nout, X)

    return shoot_batch_callable(gens_eval, ngen, p0, U, dt, substeps, keep_path)
