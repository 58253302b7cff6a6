import math

import numpy as np
import pytest

from flowbox import kernels
from flowbox.analytic import AnalyticField, DomainError
from flowbox.dynamics import (
    NotOnXError,
    SingularStartError,
    SRQuery,
    detect_returns,
    estimate_flowbox_delta,
    integrate,
    sr_ball_probe,
    sr_distance,
)
from flowbox.geometry import VectorField
from flowbox.polyring import Ideal

XY = ("x", "y")
XYZ = ("x", "y", "z")
HEIS = [VectorField.parse(["1", "0", "-1/2*y"], XYZ), VectorField.parse(["0", "1", "1/2*x"], XYZ)]


def F(comps, V=XY):
    return VectorField.parse(comps, V)


# ---------------------------------------------------------------- integrate


class TestIntegrate:
    def test_rotation_half_turn(self):
        tr = integrate(F(["-y", "x"]), [1.0, 0.0], math.pi, rtol=1e-12, atol=1e-14)
        assert np.allclose(tr.states[-1], [-1.0, 0.0], atol=1e-8)
        assert tr.status == kernels.OK and not tr.truncated

    def test_shear_closed_form(self):
        tr = integrate(F(["1", "x"]), [-0.3, 0.2], 2.0)
        for t in np.linspace(0, 2, 9):
            want = [-0.3 + t, 0.2 - 0.3 * t + t * t / 2]
            assert np.allclose(tr.state_at(t), want, atol=1e-9)

    def test_zero_field(self):
        tr = integrate(F(["0", "0"]), [0.4, -0.1], 5.0)
        assert np.array_equal(tr.states[-1], [0.4, -0.1])

    def test_backward(self):
        tr = integrate(F(["-y", "x"]), [1.0, 0.0], -math.pi / 2, rtol=1e-12, atol=1e-14)
        assert np.all(np.diff(tr.times) > 0)
        assert tr.times[0] == pytest.approx(-math.pi / 2)
        assert np.allclose(tr.states[0], [0.0, -1.0], atol=1e-9)

    def test_conserved_radius(self):
        tr = integrate(F(["-y", "x"]), [0.6, 0.8], 10.0, rtol=1e-12, atol=1e-14)
        assert np.max(np.abs(np.hypot(tr.states[:, 0], tr.states[:, 1]) - 1)) < 1e-9

    def test_dense_output_exact_at_nodes(self):
        tr = integrate(F(["-y", "x"]), [1.0, 0.0], 3.0)
        assert np.array_equal(tr(tr.times), tr.states)
        mid = 0.5 * (tr.times[1:] + tr.times[:-1])
        assert np.allclose(tr(mid), np.column_stack([np.cos(mid), np.sin(mid)]), atol=1e-6)
        with pytest.raises(ValueError):
            tr(4.0)

    def test_domain_exit(self):
        f = AnalyticField(XY, ["1", "0"], domain=[(-1, 1), (-1, 1)])
        tr = integrate(f, [0.0, 0.0], 5.0)
        assert tr.status == kernels.DOMAIN_EXIT and tr.truncated
        assert tr.states[-1][0] <= 1.0 + 1e-12
        with pytest.raises(DomainError):
            integrate(f, [2.0, 0.0], 1.0)


# ---------------------------------------------------------------- returns


class TestReturns:
    def test_rotation_returns_at_pi(self, ex1):
        rep = detect_returns(ex1.field(), ex1.ideal_evals, [1.0, 0.0], 7.0)
        assert rep.min_return == pytest.approx(math.pi, abs=1e-7)
        assert rep.times[1] == pytest.approx(2 * math.pi, abs=1e-7)

    def test_shear_return(self, ex2):
        rep = detect_returns(ex2.field(), ex2.ideal_evals, [-0.1, 0.0], 1.0)
        assert rep.min_return == pytest.approx(0.2, abs=1e-9)
        assert rep.returned

    def test_no_forward_return(self, ex2):
        rep = detect_returns(ex2.field(), ex2.ideal_evals, [0.3, 0.0], 1.0)
        assert rep.min_return is None and not rep.returned

    def test_reversed_field(self, ex2):
        rep = detect_returns(F(["-1", "-x"]), ex2.ideal_evals, [0.3, 0.0], 1.0)
        assert rep.min_return == pytest.approx(0.6, abs=1e-9)

    def test_errors(self, ex1):
        f, I = ex1.field(), ex1.ideal_evals
        with pytest.raises(NotOnXError):
            detect_returns(f, I, [1.0, 0.5], 1.0)
        with pytest.raises(SingularStartError):
            detect_returns(f, I, [0.0, 0.0], 1.0)
        with pytest.raises(ValueError):
            detect_returns(f, I, [1.0, 0.0], 0.0)

    def test_codimension_two(self):
        X = Ideal.parse(["y", "z"], XYZ)
        rep = detect_returns(F(["-y", "x", "0"], XYZ), X, [1.0, 0.0, 0.0], 7.0)
        assert rep.min_return == pytest.approx(math.pi, abs=1e-6)
        assert rep.times[1] == pytest.approx(2 * math.pi, abs=1e-6)
        # lifted off the z = 0 plane the orbit never meets X
        off = detect_returns(F(["-y", "x", "1"], XYZ), X, [1.0, 0.0, 0.0], 7.0)
        assert off.min_return is None


class TestDelta:
    def test_rotation_annulus(self, ex1):
        keep = lambda x: 0.5 <= math.hypot(*x) <= 1.0  # noqa: E731
        rep = estimate_flowbox_delta(ex1.field(), ex1.ideal_evals, [(-1, 1), (-1, 1)], 11, 10.0, keep=keep)
        assert rep.delta_est == pytest.approx(math.pi, abs=1e-6)

    @pytest.mark.parametrize("grid", [11, 21, 41])
    def test_shear_grid(self, ex2, grid):
        rep = estimate_flowbox_delta(ex2.field(), ex2.ideal_evals, [(-0.5, 0.5), (-0.5, 0.5)], grid, 10.0)
        xs = np.linspace(-0.5, 0.5, grid)
        want = 2 * np.min(np.abs(xs[np.abs(xs) > 1e-12]))
        assert rep.delta_est == pytest.approx(want, abs=1e-7)

    def test_delta_shrinks_with_grid(self, ex2):
        ds = [
            estimate_flowbox_delta(ex2.field(), ex2.ideal_evals, [(-0.5, 0.5), (-0.5, 0.5)], g, 10.0).delta_est
            for g in (11, 21, 41)
        ]
        assert ds[0] > ds[1] > ds[2]

    def test_nothing_on_X(self, ex1):
        empty = Ideal.parse(["x^2 + y^2 + 1"], XY)
        with pytest.raises(ValueError):
            estimate_flowbox_delta(ex1.field(), empty, [(-1, 1), (-1, 1)], 5, 10.0)

    def test_all_rejected(self, ex1):
        rep = estimate_flowbox_delta(ex1.field(), ex1.ideal_evals, [(-1, 1), (-1, 1)], 5, 10.0, keep=lambda x: False)
        assert rep.delta_est is None and rep.samples == []


# ---------------------------------------------------------------- SR metric


class TestSRDistance:
    def test_unit_translation(self):
        assert sr_distance([F(["1", "0"])], [0, 0], [1, 0]) == pytest.approx(1.0, abs=1e-4)

    def test_unreachable(self):
        assert sr_distance([F(["1", "0"])], [0, 0], [0, 1]) == math.inf

    def test_rotation_quarter(self):
        assert sr_distance([F(["-y", "x"])], [1, 0], [0, 1]) == pytest.approx(math.pi / 2, abs=1e-4)

    def test_same_point(self):
        assert sr_distance(HEIS, [0.1, 0.2, 0.3], [0.1, 0.2, 0.3]) == 0.0

    def test_time_of_flight(self):
        # one generator: the distance is the flow time between the points
        rng = np.random.default_rng(7)
        f = F(["1", "x"])
        for _ in range(10):
            x0, y0, t = rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.1, 1.0)
            q = [x0 + t, y0 + x0 * t + t * t / 2]
            assert sr_distance([f], [x0, y0], q) == pytest.approx(t, abs=2e-3)

    def test_horizontal_segment(self):
        # straight horizontal line through the origin is a geodesic
        assert sr_distance(HEIS, [0, 0, 0], [0.6, 0, 0]) == pytest.approx(0.6, abs=1e-4)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        tol = 1e-4
        for _ in range(4):
            p, q = rng.uniform(-0.5, 0.5, (2, 3))
            assert abs(sr_distance(HEIS, p, q, tol=tol) - sr_distance(HEIS, q, p, tol=tol)) <= 2 * tol

    def test_triangle(self):
        rng = np.random.default_rng(4)
        tol = 1e-4
        for _ in range(3):
            p, q, r = rng.uniform(-0.5, 0.5, (3, 3))
            d = lambda a, b: sr_distance(HEIS, a, b, tol=tol)  # noqa: E731
            assert d(p, q) <= d(p, r) + d(r, q) + 3 * tol


class TestBallProbe:
    def test_regular_orbit_no_hit(self, ex1):
        rep = sr_ball_probe(SRQuery([ex1.field()], [1.0, 0.0], 1.0), ex1.ideal_evals)
        assert rep.k_q == 1
        assert not rep.intersects_X_off_center

    def test_shear_hits_nearby(self, ex2):
        rep = sr_ball_probe(SRQuery([ex2.field()], [-0.05, 0.0], 0.2), ex2.ideal_evals)
        assert rep.intersects_X_off_center
        hit = rep.hits[0]
        assert abs(hit[1]) < 1e-7 and hit[0] == pytest.approx(0.05, abs=1e-6)

    def test_query_validation(self):
        with pytest.raises(ValueError):
            SRQuery([F(["1", "0"])], [0, 0], 0.0)
        with pytest.raises(ValueError):
            SRQuery([F(["1", "0"])], [0, 0], 1.0, n_steps=0)

    def test_base_point_off_X(self, ex1):
        with pytest.raises(NotOnXError):
            sr_ball_probe(SRQuery([ex1.field()], [1.0, 0.3], 1.0), ex1.ideal_evals)
