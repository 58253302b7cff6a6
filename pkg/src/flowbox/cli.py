"""Command-line front end.

Every command prints a YAML run report on stdout and exits with 0 when the
check passes (or there is nothing to check), 1 when it fails and 2 on
errors.  ``--csv PATH`` writes the tabular part of the result.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
import time
from fractions import Fraction

import numpy as np
import yaml

from . import kernels
from .blowup import BlowupSpec, blowup_chart, verify_transform_identity
from .dynamics import ATOL, CROSS_TOL, RTOL, estimate_flowbox_delta, integrate, sr_distance
from .geometry import (
    aqt_report,
    fitting_order,
    geometric_qt_at,
    geometric_qt_scan,
    regular_curve_aqt_check,
    tangency_locus,
    PreconditionError,
)
from .polyring import Polynomial
from .splitting import extract_connection, leaf_split, verify_split, y_variable
from .sysfile import dump_system, parse_system

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(ValueError):
    pass


# ------------------------------------------------------------ value parsing


def _rationals(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    return [float(v) for v in _rationals(text)]


def _intervals(text: str) -> list[tuple[Fraction, Fraction]]:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise UsageError(f"interval {part!r} must look like lo:hi")
        a, b = Fraction(lo), Fraction(hi)
        if a > b:
            raise UsageError(f"empty interval {part!r}")
        out.append((a, b))
    return out


def _grid(text: str, dim: int) -> list[int]:
    vals = [int(v) for v in text.split(",")]
    if len(vals) == 1:
        vals = vals * dim
    if len(vals) != dim:
        raise UsageError(f"grid needs 1 or {dim} entries")
    return vals


def _plain(v):
    """Convert numpy and Fraction values into YAML-safe builtins."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, Polynomial):
        return str(v)
    return v


class _Dumper(yaml.SafeDumper):
    pass


def _str_block(dumper, s):
    style = "|" if "\n" in s else None
    return dumper.represent_scalar("tag:yaml.org,2002:str", s, style=style)


_Dumper.add_representer(str, _str_block)


def _fmt(x) -> str:
    """CSV cell: shortest round-tripping float text."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(c) for c in row])


# ------------------------------------------------------------ commands
# Each returns (verdict or None, results dict, tolerances dict, csv (header, rows) or None, digest).


def _cmd_check_gqt(a):
    sf = parse_system(a.file)
    system = sf.system
    results, verdict = {}, True
    pts = [tuple(_rationals(p)) for p in a.point] if a.point else list(sf.points)
    tol = a.tol if a.tol is not None else 1e-8
    rows = []
    if pts:
        checked = []
        for p in pts:
            r = geometric_qt_at(system, p)
            checked.append({"point": list(p), "dim_L": r.L_dim, "dim_T": r.T_dim, "dim_sum": r.sum_dim, "verdict": r.verdict})
            rows.append([*map(float, p), int(r.verdict)])
            verdict &= r.verdict
        results["points"] = checked
    if a.box:
        box = _intervals(a.box)
        if len(box) != system.dim:
            raise UsageError(f"box needs {system.dim} intervals")
        scan = geometric_qt_scan(system, box, _grid(a.grid, system.dim), tol, a.jobs)
        results["scan"] = {
            "nodes": scan.nodes,
            "projected": scan.projected,
            "skipped": scan.skipped,
            "on_divisor": scan.on_divisor,
            "failures": [{"point": f.point, "margin": f.margin} for f in scan.failures],
        }
        rows += [[*map(float, f.point), 0] for f in scan.failures]
        verdict &= not scan.failures
    if not pts and not a.box:
        raise UsageError("no points in the file; pass --point or --box")
    results["verdict"] = verdict
    header = ["point_" + v for v in system.variables] + ["verdict"]
    return verdict, results, {"tol": tol}, (header, rows), sf.digest


def _cmd_check_aqt(a):
    sf = parse_system(a.file)
    rep = aqt_report(sf.system)
    nu = fitting_order(sf.system.theta, sf.system.ideal)
    results = {
        "algebraic": rep.algebraic,
        "geometric_at_points": rep.geometric,
        "checked_points": rep.checked_points,
        "theta2_ideal": list(rep.theta2.groebner()),
        "tangency_locus": list(rep.locus.groebner()),
        "fitting_order": nu,
        "verdict": rep.verdict,
    }
    return rep.verdict, results, {"exact": True}, None, sf.digest


def _cmd_check_tangency(a):
    sf = parse_system(a.file)
    W = tangency_locus(sf.system)
    try:
        ok = regular_curve_aqt_check(sf.system)
    except PreconditionError as e:
        # the invariance test needs affine-linear generators; report the locus only
        ok, note = None, str(e)
    else:
        note = None
    results = {
        "locus_generators": list(W.generators),
        "locus_groebner": list(W.groebner()),
        "locus_empty": W.is_unit,
        "locus_invariant": ok,
        "verdict": ok,
    }
    if note:
        results["not_applicable"] = note
    return ok, results, {"exact": True}, None, sf.digest


def _cmd_blowup(a):
    sf = parse_system(a.file)
    spec = BlowupSpec(tuple(v.strip() for v in a.center.split(",")), a.chart)
    t = blowup_chart(sf.system, spec)
    identities = {f"nu={k}": verify_transform_identity(sf.system, spec, k, t) for k in range(a.nu + 1)}
    text = dump_system(t.system)
    if a.out:
        with open(a.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    verdict = all(identities.values())
    results = {
        "center": list(spec.center_vars),
        "chart": spec.chart_var,
        "substitution": t.log,
        "exceptional": str(t.exceptional),
        "identities": identities,
        "transformed_system": text,
        "verdict": verdict,
    }
    return verdict, results, {"exact": True}, None, sf.digest


def _numeric_tols(a, rtol=RTOL, atol=ATOL):
    return (a.rtol if a.rtol is not None else rtol), (a.atol if a.atol is not None else atol)


def _cmd_simulate(a):
    sf = parse_system(a.file)
    rtol, atol = _numeric_tols(a)
    p0 = _floats(a.p0)
    if len(p0) != len(sf.variables):
        raise UsageError(f"p0 needs {len(sf.variables)} coordinates")
    traj = integrate(sf.field(a.generator), p0, a.tmax, rtol, atol)
    end = traj.states[-1] if a.tmax >= 0 else traj.states[0]
    results = {
        "steps": len(traj.times) - 1,
        "status": int(traj.status),
        "truncated": traj.truncated,
        "t_final": float(traj.times[-1] if a.tmax >= 0 else traj.times[0]),
        "endpoint": end,
        "verdict": not traj.truncated,
    }
    rows = [[t, *x] for t, x in zip(traj.times, traj.states)]
    return (not traj.truncated), results, {"rtol": rtol, "atol": atol}, (["t", *sf.variables], rows), sf.digest


def _cmd_delta(a):
    sf = parse_system(a.file)
    rtol, atol = _numeric_tols(a)
    tol = a.tol if a.tol is not None else CROSS_TOL
    box = [(float(lo), float(hi)) for lo, hi in _intervals(a.box)]
    if len(box) != len(sf.variables):
        raise UsageError(f"box needs {len(sf.variables)} intervals")
    keep = None
    if a.annulus:
        rmin, rmax = _floats(a.annulus)

        def keep(x, _lo=rmin, _hi=rmax):
            n = float(np.linalg.norm(x))
            return _lo <= n <= _hi

    rep = estimate_flowbox_delta(
        sf.field(a.generator),
        sf.ideal_evals,
        box,
        _grid(a.grid, len(box)),
        a.delta_max,
        tol,
        divisor_evals=list(sf.system.divisor),
        keep=keep,
        both_directions=not a.one_way,
        jobs=a.jobs,
        rtol=rtol,
        atol=atol,
    )
    results = {
        "delta_est": rep.delta_est,
        "delta_max": a.delta_max,
        "samples": len(rep.samples),
        "returned": sum(1 for _, t in rep.samples if t is not None),
        "singular": rep.singular,
        "on_divisor": rep.on_divisor,
        "off_X": rep.off_X,
        "worst_start": rep.worst.start if rep.worst is not None else None,
    }
    rows = [[i, t] for i, (_, t) in enumerate(rep.samples)]
    tols = {"rtol": rtol, "atol": atol, "tol": tol}
    return None, results, tols, (["sample_id", "min_return"], rows), sf.digest


def _cmd_srdist(a):
    sf = parse_system(a.file)
    tol = a.tol if a.tol is not None else 1e-4
    p, q = _floats(a.from_), _floats(a.to)
    d = sr_distance(list(sf.system.theta), p, q, a.horizon, a.n_steps, a.budget, tol, a.seed)
    results = {"from": p, "to": q, "distance": d, "reachable": math.isfinite(d)}
    return None, results, {"tol": tol, "n_steps": a.n_steps, "horizon": a.horizon}, None, sf.digest


def _cmd_split(a):
    sf = parse_system(a.file)
    V = sf.variables
    if a.y_var not in V:
        raise UsageError(f"unknown variable {a.y_var}")
    Y, W = None, []
    for g in sf.system.theta:
        try:
            if Y is None and y_variable(g) == a.y_var:
                Y = g
                continue
        except ValueError:
            pass
        W.append(g)
    if Y is None:
        raise UsageError(f"no generator equals d/d{a.y_var}")
    A = extract_connection(Y, W, a.degree_bound)
    zvars = [v for v in V if v != a.y_var]
    zbox = _intervals(a.z_box) if a.z_box else [(Fraction(-1), Fraction(1))] * len(zvars)
    if len(zbox) != len(zvars):
        raise UsageError(f"z-box needs {len(zvars)} intervals")
    counts = _grid(a.grid, len(zvars))
    z_grid = [np.linspace(float(lo), float(hi), n) if n > 1 else np.array([float(lo + hi) / 2]) for (lo, hi), n in zip(zbox, counts)]
    rtol = a.rtol if a.rtol is not None else 1e-12
    tol = a.tol if a.tol is not None else 1e-8
    span = _floats(a.span)
    res = leaf_split(Y, W, A, z_grid, tuple(span), rtol, a.y_nodes)
    ok = verify_split(res, tol)
    results = {
        "connection": [[str(c) for c in row] for row in A],
        "commutator_residual": res.commutator_residual,
        "rank_preserved": res.rank_ok,
        "truncated": res.truncated,
        "nodes": int(np.prod(res.mu_grid.shape[:-2])),
        "verdict": ok,
    }
    s = res.s
    rows = []
    for zi in itertools.product(*[range(len(g)) for g in z_grid]):
        z = [z_grid[k][i] for k, i in enumerate(zi)]
        for k, y in enumerate(res.y_grid):
            rows.append([*z, y, *res.mu_grid[zi + (k,)].ravel()])
    header = [*zvars, a.y_var] + [f"mu_{i}_{j}" for i in range(s) for j in range(s)]
    return ok, results, {"rtol": rtol, "tol": tol}, (header, rows), sf.digest


def _cmd_counterexample(a):
    from . import counterexample as ce

    what = a.which
    if what == "lemma":
        if a.grid:
            n = a.grid
            s_vals = tuple(0.7 * k / (n - 1) for k in range(n))
        else:
            s_vals = (0.0, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3, 0.49, 0.7)
        rows, rich = ce.lemma_table(s_vals)
        u0_row = next(r for r in rows if r.s == 0.0) if 0.0 in s_vals else ce.solve_h(0.0)
        target = math.sqrt(6) / 2
        results = {
            "U(0)": u0_row.U,
            "U(0)_extrapolated": rich,
            "extrapolation_error": abs(rich - target),
            "rows": [{"s": r.s, "h": r.h, "U": r.U, "residual": r.residual} for r in rows],
            "verdict": abs(rich - target) < 1e-9,
        }
        csvpart = (["s", "h", "U"], [[r.s, r.h, r.U] for r in rows])
        return results["verdict"], results, {"newton": "machine precision", "check": 1e-9}, csvpart, None
    if what == "claim1":
        n = a.grid or 200
        rep = ce.verify_claim1(n, n)
        results = {
            "grid": list(rep.grid_shape),
            "common_zero_off_origin": rep.common_zero_off_origin,
            "grid_min_scaled": rep.grid_min_scaled,
            "circle_r": rep.circle_r,
            "circle_min": rep.circle_min,
            "curve_min_scaled": rep.curve_min_scaled,
            "V(0)": rep.V0_estimate,
            "V(0)_error": rep.V0_error,
            "branch_coefficients": list(rep.branch_coefficients),
            "verdict": rep.verdict and rep.V0_error < 1e-3,
        }
        return results["verdict"], results, {"curve_tol": 1e-10, "V0_tol": 1e-3}, None, None
    if what == "claim2":
        r0s = _floats(a.r0) if a.r0 else [0.5, 0.3, 0.1, 0.05]
        rtol, atol = _numeric_tols(a, 1e-12, 1e-14)
        blown = ce.blown_up_system()
        reps = [ce.verify_claim2(r, blown, rtol, atol) for r in r0s]
        rows = [[r.r0, r.t_return, r.z_residual, r.w_residual] for r in reps]
        tol = a.tol if a.tol is not None else 1e-8
        ok = all(r.membership_residual < tol for r in reps)
        results = {
            "returns": [
                {
                    "r0": r.r0,
                    "t_return": r.t_return,
                    "detected_return": r.detected_return,
                    "membership_residual": r.membership_residual,
                    "orbit_error": r.orbit_error,
                    "t_over_r0_squared": r.t_return / r.r0**2,
                }
                for r in reps
            ],
            "verdict": ok,
        }
        return ok, results, {"rtol": rtol, "atol": atol, "tol": tol}, (["r0", "t_return", "z_residual", "w_residual"], rows), None
    if what == "remark5d":
        b = ce.build_remark_5d(seed=a.seed)
        qt = ce.remark5d_generic_qt(b)
        ok = ce.remark5d_shadow_aqt(b) and b.aqt_sample_residual < 1e-12 and qt.verdict
        results = {
            "unit_in_derivative_ideal": str(b.unit),
            "certificate_residual": b.aqt_sample_residual,
            "shadow_aqt": ce.remark5d_shadow_aqt(b),
            "generic_qt": qt.verdict,
            "qt_margin": qt.margin,
            "verdict": ok,
        }
        return ok, results, {"certificate": 1e-12}, None, None
    raise UsageError(f"unknown counterexample command {what}")


# ------------------------------------------------------------ parser


def _common(p: argparse.ArgumentParser):
    g = p.add_argument_group("numerics")
    g.add_argument("--rtol", type=float, default=None, help="relative integration tolerance")
    g.add_argument("--atol", type=float, default=None, help="absolute integration tolerance")
    g.add_argument("--tol", type=float, default=None, help="check tolerance")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jobs", type=int, default=1, help="threads for grid sweeps")
    g.add_argument("--csv", metavar="PATH", default=None, help="write tabular results")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowbox", description="Quasi-transversality checks, blow-ups and return-time estimates.")
    sub = p.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", help="algebraic and pointwise checks")
    csub = chk.add_subparsers(dest="check", required=True)
    g = csub.add_parser("gqt", help="pointwise transversality")
    g.add_argument("file")
    g.add_argument("--point", action="append", help="rational point, comma separated; repeatable")
    g.add_argument("--box", help="lo:hi per variable, comma separated")
    g.add_argument("--grid", default="20")
    g.set_defaults(func=_cmd_check_gqt)
    for name, fn in (("aqt", _cmd_check_aqt), ("tangency", _cmd_check_tangency)):
        c = csub.add_parser(name)
        c.add_argument("file")
        c.set_defaults(func=fn)

    b = sub.add_parser("blowup", help="one chart of a blow-up at a coordinate center")
    b.add_argument("file")
    b.add_argument("--center", required=True)
    b.add_argument("--chart", required=True)
    b.add_argument("--nu", type=int, default=1)
    b.add_argument("--out", help="write the transformed system file here")
    b.set_defaults(func=_cmd_blowup)

    s = sub.add_parser("simulate", help="integrate one generator")
    s.add_argument("file")
    s.add_argument("--p0", required=True)
    s.add_argument("--tmax", type=float, required=True)
    s.add_argument("--generator", type=int, default=0)
    s.set_defaults(func=_cmd_simulate)

    d = sub.add_parser("delta", help="smallest return time to X over a sampled box")
    d.add_argument("file")
    d.add_argument("--box", required=True)
    d.add_argument("--grid", default="20")
    d.add_argument("--delta-max", type=float, default=10.0)
    d.add_argument("--annulus", help="rmin,rmax: keep samples with rmin <= |p| <= rmax")
    d.add_argument("--one-way", action="store_true", help="forward time only")
    d.add_argument("--generator", type=int, default=0)
    d.set_defaults(func=_cmd_delta)

    r = sub.add_parser("srdist", help="sub-Riemannian distance upper bound")
    r.add_argument("file")
    r.add_argument("--from", dest="from_", required=True)
    r.add_argument("--to", required=True)
    r.add_argument("--horizon", type=float, default=1.0)
    r.add_argument("--n-steps", type=int, default=8)
    r.add_argument("--budget", type=int, default=20000)
    r.set_defaults(func=_cmd_srdist)

    sp_ = sub.add_parser("split", help="leaf reduction along a coordinate generator")
    sp_.add_argument("file")
    sp_.add_argument("--y-var", required=True)
    sp_.add_argument("--grid", default="5", help="z nodes per axis")
    sp_.add_argument("--span", default="-1,1")
    sp_.add_argument("--z-box", help="lo:hi per z variable")
    sp_.add_argument("--y-nodes", type=int, default=41)
    sp_.add_argument("--degree-bound", type=int, default=4)
    sp_.set_defaults(func=_cmd_split)

    ce = sub.add_parser("counterexample", help="the four-dimensional counterexample")
    ce.add_argument("which", choices=["lemma", "claim1", "claim2", "remark5d"])
    ce.add_argument("--r0", help="comma-separated radii for claim2")
    ce.add_argument("--grid", type=int, default=None)
    ce.set_defaults(func=_cmd_counterexample)

    for parser in (g, *[csub.choices[n] for n in ("aqt", "tangency")], b, s, d, r, sp_, ce):
        _common(parser)
    return p


def run(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the command and print its report; returns the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    t0 = time.perf_counter()
    try:
        verdict, results, tols, table, digest = args.func(args)
    except Exception as e:  # every module error maps to exit 2
        print(f"flowbox: error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    report = {
        "command": "flowbox " + " ".join(argv),
        "input_digest": digest,
        "backend": kernels.BACKEND,
        "seed": args.seed,
        "tolerances": tols,
        "results": results,
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    if args.csv and table is not None:
        _write_csv(args.csv, *table)
        report["csv"] = args.csv
    yaml.dump(_plain(report), stdout, Dumper=_Dumper, sort_keys=False, default_flow_style=None, width=100)
    if verdict is None or verdict:
        return EXIT_OK
    return EXIT_FAIL


def main(argv=None) -> int:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
