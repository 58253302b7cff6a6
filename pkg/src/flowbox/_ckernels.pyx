# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels; same signatures and semantics as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, fmax, fmin, pow, isfinite, INFINITY

cnp.import_array()

BACKEND = "cython"

cdef enum:
    OK = 0
    DOMAIN_EXIT = 1
    STEP_UNDERFLOW = 2
    MAX_STEPS = 3

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 35.0 / 384 - 5179.0 / 57600
cdef double E3 = 500.0 / 1113 - 7571.0 / 16695
cdef double E4 = 125.0 / 192 - 393.0 / 640
cdef double E5 = -2187.0 / 6784 + 92097.0 / 339200
cdef double E6 = 11.0 / 84 - 187.0 / 2100
cdef double E7 = -1.0 / 40


cdef inline void _eval(const long[:, ::1] exps, const double[::1] coef, const long[::1] comp,
                       const double* x, double* out, Py_ssize_t nout, Py_ssize_t dim) noexcept nogil:
    cdef Py_ssize_t k, j, p
    cdef double v
    for k in range(nout):
        out[k] = 0.0
    for k in range(coef.shape[0]):
        v = coef[k]
        for j in range(dim):
            for p in range(exps[k, j]):
                v *= x[j]
        out[comp[k]] += v


def poly_eval(long[:, ::1] exps, double[::1] coef, long[::1] comp, Py_ssize_t nout, x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros(nout)
    cdef double[::1] ov = out
    if nout == 0 or xv.shape[0] == 0:
        return out
    with nogil:
        _eval(exps, coef, comp, &xv[0], &ov[0], nout, xv.shape[0])
    return out


def poly_eval_batch(long[:, ::1] exps, double[::1] coef, long[::1] comp, Py_ssize_t nout, X):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], i
    out = np.zeros((n, nout))
    cdef double[:, ::1] ov = out
    if nout == 0 or n == 0:
        return out
    with nogil:
        for i in range(n):
            _eval(exps, coef, comp, &Xv[i, 0], &ov[i, 0], nout, Xv.shape[1])
    return out


cdef double _initial_step(const long[:, ::1] exps, const double[::1] coef, const long[::1] comp,
                          double[::1] y0, double[::1] f0, double[::1] tmp, double[::1] f1,
                          double rtol, double atol, Py_ssize_t dim) noexcept nogil:
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, sc, h0, h1
    cdef Py_ssize_t i
    for i in range(dim):
        sc = atol + rtol * fabs(y0[i])
        d0 = fmax(d0, fabs(y0[i]) / sc)
        d1 = fmax(d1, fabs(f0[i]) / sc)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(dim):
        tmp[i] = y0[i] + h0 * f0[i]
    _eval(exps, coef, comp, &tmp[0], &f1[0], dim, dim)
    for i in range(dim):
        sc = atol + rtol * fabs(y0[i])
        d2 = fmax(d2, fabs(f1[i] - f0[i]) / sc)
    d2 /= h0
    if fmax(d1, d2) <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    return fmin(100 * h0, h1)


def dopri5_poly(long[:, ::1] exps, double[::1] coef, long[::1] comp, y0,
                double t0, double t1, double rtol, double atol, double h0, double hmax,
                Py_ssize_t max_steps, lo, hi):
    """Adaptive Dormand-Prince integration of an autonomous packed field."""
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef Py_ssize_t dim = y.shape[0]
    cdef double[::1] lov = np.full(dim, -np.inf) if lo is None else np.ascontiguousarray(lo, dtype=np.float64)
    cdef double[::1] hiv = np.full(dim, np.inf) if hi is None else np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t cap = max_steps + 1
    if t1 - t0 <= 0.0:
        cap = 1
    ts_a = np.empty(cap)
    ys_a = np.empty((cap, dim))
    fs_a = np.empty((cap, dim))
    er_a = np.empty(cap)
    cdef double[::1] ts = ts_a, errs = er_a
    cdef double[:, ::1] ys = ys_a, fs = fs_a
    cdef double[:, ::1] k = np.empty((7, dim))
    cdef double[::1] yi = np.empty(dim), ynew = np.empty(dim), fy = np.empty(dim)
    cdef double t = t0, h, err, sc, e, fac, tnew
    cdef Py_ssize_t i, n = 0, steps = 0
    cdef int status = OK, last, outside
    _eval(exps, coef, comp, &y[0], &fy[0], dim, dim)
    ts[0] = t
    errs[0] = 0.0
    for i in range(dim):
        ys[0, i] = y[i]
        fs[0, i] = fy[i]
    if t1 - t0 <= 0.0:
        return ts_a[:1], ys_a[:1], fs_a[:1], er_a[:1], OK
    with nogil:
        if h0 > 0:
            h = h0
        else:
            h = _initial_step(exps, coef, comp, y, fy, yi, ynew, rtol, atol, dim)
        h = fmin(fmin(h, hmax), t1 - t0)
        while t < t1:
            if steps >= max_steps:
                status = MAX_STEPS
                break
            if h < 1e-14 * fmax(1.0, fabs(t)):
                status = STEP_UNDERFLOW
                break
            last = t + h >= t1
            if last:
                h = t1 - t
            for i in range(dim):
                k[0, i] = fy[i]
            for i in range(dim):
                yi[i] = y[i] + h * A21 * k[0, i]
            _eval(exps, coef, comp, &yi[0], &k[1, 0], dim, dim)
            for i in range(dim):
                yi[i] = y[i] + h * (A31 * k[0, i] + A32 * k[1, i])
            _eval(exps, coef, comp, &yi[0], &k[2, 0], dim, dim)
            for i in range(dim):
                yi[i] = y[i] + h * (A41 * k[0, i] + A42 * k[1, i] + A43 * k[2, i])
            _eval(exps, coef, comp, &yi[0], &k[3, 0], dim, dim)
            for i in range(dim):
                yi[i] = y[i] + h * (A51 * k[0, i] + A52 * k[1, i] + A53 * k[2, i] + A54 * k[3, i])
            _eval(exps, coef, comp, &yi[0], &k[4, 0], dim, dim)
            for i in range(dim):
                yi[i] = y[i] + h * (A61 * k[0, i] + A62 * k[1, i] + A63 * k[2, i] + A64 * k[3, i] + A65 * k[4, i])
            _eval(exps, coef, comp, &yi[0], &k[5, 0], dim, dim)
            for i in range(dim):
                ynew[i] = y[i] + h * (B1 * k[0, i] + B3 * k[2, i] + B4 * k[3, i] + B5 * k[4, i] + B6 * k[5, i])
            _eval(exps, coef, comp, &ynew[0], &k[6, 0], dim, dim)
            err = 0.0
            for i in range(dim):
                e = h * (E1 * k[0, i] + E3 * k[2, i] + E4 * k[3, i] + E5 * k[4, i] + E6 * k[5, i] + E7 * k[6, i])
                sc = atol + rtol * fmax(fabs(y[i]), fabs(ynew[i]))
                err = fmax(err, fabs(e) / sc)
                if not isfinite(ynew[i]):
                    err = INFINITY
            if err <= 1.0:
                tnew = t1 if last else t + h
                outside = 0
                for i in range(dim):
                    if ynew[i] < lov[i] or ynew[i] > hiv[i]:
                        outside = 1
                if outside:
                    status = DOMAIN_EXIT
                    break
                t = tnew
                n += 1
                ts[n] = t
                errs[n] = err
                for i in range(dim):
                    y[i] = ynew[i]
                    fy[i] = k[6, i]
                    ys[n, i] = y[i]
                    fs[n, i] = fy[i]
                steps += 1
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
            else:
                if not isfinite(err):
                    fac = 0.2
                else:
                    fac = fmax(0.2, 0.9 * pow(err, -0.2))
            h = fmin(h * fac, hmax)
    return ts_a[:n + 1].copy(), ys_a[:n + 1].copy(), fs_a[:n + 1].copy(), er_a[:n + 1].copy(), status


cdef inline void _ctrl_rhs(const long[:, ::1] exps, const double[::1] coef, const long[::1] comp,
                           const double* x, const double* u, double* G, double* out,
                           Py_ssize_t ngen, Py_ssize_t dim) noexcept nogil:
    cdef Py_ssize_t g, d
    _eval(exps, coef, comp, x, G, ngen * dim, dim)
    for d in range(dim):
        out[d] = 0.0
    for g in range(ngen):
        for d in range(dim):
            out[d] += u[g] * G[g * dim + d]


def shoot_batch(long[:, ::1] exps, double[::1] coef, long[::1] comp, Py_ssize_t ngen,
                p0, U, double dt, Py_ssize_t substeps, bint keep_path=False):
    """RK4 flow under piecewise-constant controls, one trajectory per batch row."""
    cdef double[::1] p = np.ascontiguousarray(p0, dtype=np.float64)
    cdef double[:, :, ::1] Uv = np.ascontiguousarray(U, dtype=np.float64)
    cdef Py_ssize_t B = Uv.shape[0], nsteps = Uv.shape[1], dim = p.shape[0]
    cdef Py_ssize_t b, s, q, d, idx
    cdef double hs = dt / substeps
    X_a = np.empty((B, dim))
    cdef double[:, ::1] X = X_a
    if keep_path:
        path_a = np.empty((B, nsteps * substeps + 1, dim))
    else:
        path_a = np.empty((1, 1, 1))
    cdef double[:, :, ::1] path = path_a
    cdef double[::1] x = np.empty(dim), xt = np.empty(dim)
    cdef double[::1] k1 = np.empty(dim), k2 = np.empty(dim), k3 = np.empty(dim), k4 = np.empty(dim)
    cdef double[::1] G = np.empty(max(ngen * dim, 1))
    if dim == 0:
        return X_a, (path_a if keep_path else None)
    with nogil:
        for b in range(B):
            for d in range(dim):
                x[d] = p[d]
            if keep_path:
                for d in range(dim):
                    path[b, 0, d] = x[d]
            idx = 1
            for s in range(nsteps):
                for q in range(substeps):
                    _ctrl_rhs(exps, coef, comp, &x[0], &Uv[b, s, 0], &G[0], &k1[0], ngen, dim)
                    for d in range(dim):
                        xt[d] = x[d] + 0.5 * hs * k1[d]
                    _ctrl_rhs(exps, coef, comp, &xt[0], &Uv[b, s, 0], &G[0], &k2[0], ngen, dim)
                    for d in range(dim):
                        xt[d] = x[d] + 0.5 * hs * k2[d]
                    _ctrl_rhs(exps, coef, comp, &xt[0], &Uv[b, s, 0], &G[0], &k3[0], ngen, dim)
                    for d in range(dim):
                        xt[d] = x[d] + hs * k3[d]
                    _ctrl_rhs(exps, coef, comp, &xt[0], &Uv[b, s, 0], &G[0], &k4[0], ngen, dim)
                    for d in range(dim):
                        x[d] = x[d] + hs / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d])
                    if keep_path:
                        for d in range(dim):
                            path[b, idx, d] = x[d]
                        idx += 1
            for d in range(dim):
                X[b, d] = x[d]
    return X_a, (path_a if keep_path else None)
