"""End-to-end acceptance gate.

Each test evaluates one criterion, prints a single ``PASS``/``FAIL`` line
(visible without ``-s``) and then asserts.  Runtime limits include setup.
"""
import io
import math
import random
import time

import numpy as np
import pytest
import yaml
from scipy.linalg import expm

from flowbox.blowup import BlowupSpec, blowup_chart, verify_transform_identity
from flowbox.cli import run
from flowbox.counterexample import U0, blown_up_system, verify_claim1, verify_claim2
from flowbox.dynamics import detect_returns, estimate_flowbox_delta, integrate, sr_distance
from flowbox.geometry import Distribution, FoliatedSystem, VectorField, aqt_report, geometric_qt_at
from flowbox.hbranch import solve_h
from flowbox.polyring import Ideal, normal_form, s_polynomial
from flowbox.splitting import extract_connection, leaf_split, verify_split
from flowbox.sysfile import parse_system
from oracle import member, random_membership_instance


@pytest.fixture
def gate(capsys):
    def emit(n, title, checks, elapsed, limit=None):
        failed = [k for k, ok in checks.items() if not ok]
        if limit is not None and elapsed >= limit:
            failed.append(f"runtime {elapsed:.2f}s >= {limit}s")
        status = "PASS" if not failed else "FAIL"
        extra = "" if not failed else "  failed: " + "; ".join(failed)
        with capsys.disabled():
            print(f"\n[acceptance {n}] {status}  {title}  ({elapsed:.2f}s){extra}")
        assert not failed, failed

    return emit


def cli(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, yaml.safe_load(buf.getvalue())


def test_1_lemma_constant(gate):
    t0 = time.perf_counter()
    code, rep = cli("counterexample", "lemma")
    el = time.perf_counter() - t0
    res = rep["results"]
    gate(
        1,
        "lemma constant U(0) = sqrt(6)/2",
        {
            "exit 0": code == 0,
            "U(0) row within 1e-9": abs(res["U(0)"] - math.sqrt(6) / 2) < 1e-9,
            "U(0) matches 1.2247448714": abs(res["U(0)"] - 1.2247448714) < 1e-9,
            "extrapolated U(0) within 1e-9": abs(res["U(0)_extrapolated"] - math.sqrt(6) / 2) < 1e-9,
        },
        el,
        limit=1.0,
    )


def test_2_claim1_branch(gate):
    t0 = time.perf_counter()
    rep = verify_claim1(n_r=200, n_alpha=200, r_max=0.5)
    el = time.perf_counter() - t0
    gate(
        2,
        f"tangency branch V(0) = {rep.V0_estimate:.10f}, no common zero on 200x200 grid",
        {
            "V(0) within 1e-3 of sqrt(2)/2": abs(rep.V0_estimate - math.sqrt(2) / 2) < 1e-3,
            "grid is 200x200": rep.grid_shape == (200, 200),
            "no common zero off the origin": not rep.common_zero_off_origin,
            "r = 0.25 circle residual > 1e-6": rep.circle_min > 1e-6,
        },
        el,
        limit=30.0,
    )


def test_3_claim2_returns(gate):
    t0 = time.perf_counter()
    blown = blown_up_system()
    radii = (0.5, 0.3, 0.1, 0.05)
    reps = [verify_claim2(r, blown) for r in radii]
    el = time.perf_counter() - t0
    ts = [r.t_return for r in reps]
    gate(
        3,
        "blown-up orbit returns to X at t = h(r0^2)",
        {
            "t_return = h(r0^2)": all(r.t_return == solve_h(r.r0**2).h for r in reps),
            "membership residual < 1e-8": all(r.membership_residual < 1e-8 for r in reps),
            "closed-form orbit to 1e-9": all(r.orbit_error < 1e-9 for r in reps),
            "t_return decreasing": all(a > b for a, b in zip(ts, ts[1:])),
            "t/r0^2 within 1e-2 of sqrt(6)/2 at r0 = 0.05": abs(ts[-1] / 0.05**2 - U0) < 1e-2,
        },
        el,
        limit=10.0,
    )


def test_4_example1(gate):
    t0 = time.perf_counter()
    sf = parse_system("example1.sys")
    aqt = aqt_report(sf.system)
    keep = lambda x: 0.2 <= math.hypot(*x) <= 1.0  # noqa: E731
    rep = estimate_flowbox_delta(sf.field(), sf.ideal_evals, [(-1, 1), (-1, 1)], 21, 10.0, keep=keep)
    el = time.perf_counter() - t0
    gate(
        4,
        f"rotation: AQT and delta = {rep.delta_est!r} on 0.2 <= |p| <= 1",
        {
            "AQT verdict true": aqt.verdict,
            "delta within 1e-6 of pi": rep.delta_est is not None and abs(rep.delta_est - math.pi) < 1e-6,
            "delta above pi/4": rep.delta_est is not None and rep.delta_est >= math.pi / 4,
        },
        el,
        limit=10.0,
    )


def test_5_example2(gate):
    t0 = time.perf_counter()
    sf = parse_system("example2.sys")
    at_origin = geometric_qt_at(sf.system, (0, 0))
    aqt = aqt_report(sf.system)
    unit_theta2 = aqt.theta2.is_unit
    deltas, matched = {}, True
    for grid in (11, 21, 41):
        rep = estimate_flowbox_delta(sf.field(), sf.ideal_evals, [(-0.5, 0.5), (-0.5, 0.5)], grid, 10.0)
        xs = np.linspace(-0.5, 0.5, grid)
        smallest = np.min(np.abs(xs[np.abs(xs) > 1e-12]))
        deltas[grid] = (rep.delta_est, 2 * smallest)
        matched &= rep.delta_est is not None and abs(rep.delta_est - 2 * smallest) < 1e-7
    # forward return time from (x0, 0) is -2 x0 for x0 < 0
    for x0 in (-0.4, -0.1, -0.025):
        t = detect_returns(sf.field(), sf.ideal_evals, [x0, 0.0], 1.0).min_return
        matched &= t is not None and abs(t - (-2 * x0)) < 1e-7
    el = time.perf_counter() - t0
    ds = [deltas[g][0] for g in (11, 21, 41)]
    gate(
        5,
        "shear: GQT fails at the origin, AQT fails, delta = 2 min|x0| shrinks with the grid",
        {
            "GQT false at origin": at_origin.verdict is False,
            "AQT false": not aqt.verdict and not aqt.algebraic,
            "theta^2[I] = (1)": unit_theta2,
            "delta = 2 min|x0| to 1e-7 and return time -2 x0": matched,
            "delta shrinks with grid": ds[0] > ds[1] > ds[2],
        },
        el,
    )


def _sigma(q, spec, V):
    p = np.array(q, dtype=float)
    c = V.index(spec.chart_var)
    for v in spec.center_vars:
        if v != spec.chart_var:
            p[V.index(v)] *= q[c]
    return p


def _conjugacy(system, spec, starts):
    chart = blowup_chart(system, spec).system.theta[0]
    worst = 0.0
    for q in starts:
        a = integrate(chart, q, 0.5, rtol=1e-12, atol=1e-14)
        b = integrate(system.theta[0], _sigma(q, spec, system.variables), 0.5, rtol=1e-12, atol=1e-14)
        for t in np.linspace(0, 0.5, 11):
            worst = max(worst, float(np.max(np.abs(_sigma(a.state_at(t), spec, system.variables) - b.state_at(t)))))
    return worst


def test_6_blowup_identities(gate):
    t0 = time.perf_counter()
    XY = ("x", "y")
    rot = FoliatedSystem(XY, Distribution([VectorField.parse(["-y", "x"], XY)]), Ideal.parse(["y"], XY))
    shadow = parse_system("counterexample4d.sys").system
    s_rot, s_sh = BlowupSpec(("x", "y"), "x"), BlowupSpec(("x", "y", "w"), "x")
    ids = {
        f"{name} nu={nu}": verify_transform_identity(sys_, spec, nu)
        for name, sys_, spec in (("rotation", rot, s_rot), ("shadow", shadow, s_sh))
        for nu in (0, 1)
    }
    rot_starts, sh_starts = [], []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        rad, ang = rng.uniform(0.2, 1.0), rng.uniform(-0.9, 0.9)
        rot_starts.append([rad * math.cos(ang), math.tan(ang)])
        rng = np.random.default_rng(100 + seed)
        sh_starts.append([rng.uniform(0.3, 1.0), rng.uniform(-0.5, 0.5), rng.uniform(-1, 1), rng.uniform(-1, 1)])
    err_rot = _conjugacy(rot, s_rot, rot_starts)
    err_sh = _conjugacy(shadow, s_sh, sh_starts)
    el = time.perf_counter() - t0
    checks = {f"identity {k}": v for k, v in ids.items()}
    checks[f"rotation conjugacy {err_rot:.1e} < 1e-7"] = err_rot < 1e-7
    checks[f"shadow conjugacy {err_sh:.1e} < 1e-7"] = err_sh < 1e-7
    gate(6, "blow-up transform identities and flow conjugacy", checks, el)


def test_7_groebner_oracle(gate):
    t0 = time.perf_counter()
    rng = random.Random(20240607)
    agree, spolys_ok = 0, True
    for _ in range(100):
        I, f = random_membership_instance(rng)
        agree += I.contains(f) == member(f, I.generators, 6)
        B = I.groebner()
        for i in range(len(B)):
            for j in range(i + 1, len(B)):
                spolys_ok &= normal_form(s_polynomial(B[i], B[j]), B).is_zero
    el = time.perf_counter() - t0
    gate(
        7,
        f"Groebner membership agrees with the linear-algebra oracle on {agree}/100 queries",
        {"100/100 agree": agree == 100, "S-polynomials reduce to zero": spolys_ok},
        el,
    )


def test_8_splitting(gate):
    t0 = time.perf_counter()
    V = ("y", "z1", "z2")
    Y = VectorField.parse(["1", "0", "0"], V)
    W = [VectorField.parse(["0", "1", "y"], V), VectorField.parse(["0", "0", "1"], V)]
    A = extract_connection(Y, W)
    res = leaf_split(Y, W, A, [np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)], y_span=(-1, 1))
    ok = verify_split(res)
    worst = 0.0
    for seed in range(3):
        C = np.random.default_rng(seed).normal(size=(2, 2))
        r = leaf_split(Y, W, C, [np.array([0.0]), np.array([0.0])], y_span=(-1, 1), y_nodes=21)
        worst = max(worst, max(float(np.max(np.abs(r.mu_grid[0, 0, k] - expm(-y * C.T)))) for k, y in enumerate(r.y_grid)))
    el = time.perf_counter() - t0
    gate(
        8,
        f"leaf split residual {res.commutator_residual:.1e}, expm deviation {worst:.1e}",
        {
            "connection A = [[0,0],[1,0]]": [[str(a) for a in row] for row in A] == [["0", "0"], ["1", "0"]],
            "commutator residual < 1e-8": res.commutator_residual < 1e-8,
            "rank preserved at every node": ok and res.rank_ok,
            "constant A matches expm to 1e-8": worst < 1e-8,
        },
        el,
    )


def test_9_sr_distance(gate):
    t0 = time.perf_counter()
    XY = ("x", "y")
    shear = VectorField.parse(["1", "x"], XY)
    rng = np.random.default_rng(7)
    tof = 0.0
    for _ in range(10):
        x0, y0, t = rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 1.0)
        d = sr_distance([shear], [x0, y0], [x0 + t, y0 + x0 * t + t * t / 2])
        tof = max(tof, abs(d - t))
    arc = sr_distance([VectorField.parse(["-y", "x"], XY)], [1, 0], [0, 1])
    unreachable = sr_distance([VectorField.parse(["1", "0"], XY)], [0, 0], [0, 1])
    el = time.perf_counter() - t0
    gate(
        9,
        f"SR distance: time of flight error {tof:.1e}, arc {arc:.8f}",
        {
            "time of flight within 2e-3": tof < 2e-3,
            "rotation arc within 5e-3 of pi/2": abs(arc - math.pi / 2) < 5e-3,
            "unreachable pair is inf": unreachable == math.inf,
        },
        el,
    )
