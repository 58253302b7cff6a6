import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowbox.polyring import (
    GREVLEX,
    LEX,
    GroebnerBudgetError,
    Ideal,
    MonomialOrder,
    Polynomial,
    PolynomialSyntaxError,
    UnknownVariableError,
    differentiate,
    groebner_basis,
    ideal_contains,
    ideal_member,
    ideal_product,
    ideal_sum,
    normal_form,
    s_polynomial,
)
from oracle import member, random_membership_instance

XY = ("x", "y")
XYZ = ("x", "y", "z")


def P(text, V=XY):
    return Polynomial.parse(text, V)


# ---------------------------------------------------------------- parsing


class TestParse:
    def test_roundtrip(self):
        p = P("3/2*x^2*y - y")
        assert P(str(p)) == p
        assert p.terms == {(2, 1): Fraction(3, 2), (0, 1): Fraction(-1)}

    def test_whitespace_insignificant(self):
        assert P(" 3 / 2 * x ^ 2 * y-y ") == P("3/2*x^2*y - y")

    @pytest.mark.parametrize("bad", ["0.5*x", "x^", "x**2", "2x", "x + + y", "1e3*x", ""])
    def test_rejects(self, bad):
        with pytest.raises(PolynomialSyntaxError):
            P(bad)

    def test_float_error_has_column(self):
        with pytest.raises(PolynomialSyntaxError) as ei:
            P("x + 0.5*y")
        assert ei.value.column == 5

    def test_unknown_variable(self):
        with pytest.raises((UnknownVariableError, PolynomialSyntaxError)) as ei:
            P("x + q")
        assert "q" in str(ei.value)

    def test_zero_has_no_terms(self):
        assert P("x - x").terms == {}
        assert P("0").is_zero


# ---------------------------------------------------------------- arithmetic


class TestArithmetic:
    def test_no_zero_coefficients(self):
        p = P("x + y") * P("x - y") + P("y^2")
        assert p == P("x^2")
        assert all(c != 0 for c in p.terms.values())

    def test_exact_rationals(self):
        p = P("1/3*x") + P("1/6*x")
        assert p.terms[(1, 0)] == Fraction(1, 2)

    def test_power_and_substitute(self):
        p = P("x + y") ** 3
        assert p == P("x^3 + 3*x^2*y + 3*x*y^2 + y^3")
        q = p.substitute({"y": P("x*y")})
        assert q == P("x^3 + 3*x^3*y + 3*x^3*y^2 + x^3*y^3")

    def test_divide_by_variable(self):
        assert P("x^2*y + x").divide_by_variable("x") == P("x*y + 1")
        assert P("x^2*y + y").divide_by_variable("x") is None


class TestDifferentiate:
    def test_examples(self):
        assert differentiate(P("y"), "y") == P("1")
        assert differentiate(P("x^2*y - y"), "x") == P("2*x*y")
        assert differentiate(P("3/2*x^2*y^3"), "x") == P("3*x*y^3")

    def test_unknown_variable_named(self):
        with pytest.raises(UnknownVariableError) as ei:
            differentiate(P("x"), "t")
        assert "t" in str(ei.value)

    def test_matches_finite_differences(self):
        rng = random.Random(3)
        f = P("3/2*x^2*y^3")
        df = differentiate(f, "x")
        for _ in range(5):
            pt = [Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(2)]
            x, y = map(float, pt)
            h = 1e-6 * max(1.0, abs(x))
            fd = (f.evaluate_float([x + h, y]) - f.evaluate_float([x - h, y])) / (2 * h)
            exact = float(df.evaluate(pt))
            assert fd == pytest.approx(exact, rel=1e-6, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.data())
    def test_leibniz(self, data):
        seed = data.draw(st.integers(0, 10**6))
        from oracle import random_poly

        rng = random.Random(seed)
        f, g = random_poly(rng, XYZ, 3, 3), random_poly(rng, XYZ, 3, 3)
        for v in XYZ:
            assert differentiate(f * g, v) == differentiate(f, v) * g + f * differentiate(g, v)


# ---------------------------------------------------------------- Groebner


# reduced bases computed independently with sympy and frozen
FROZEN = [
    (["x^2 - y", "x^3"], XY, LEX, ["x^2 - y", "x*y", "y^2"]),
    (["x^2 - y", "x^3"], XY, GREVLEX, ["x^2 - y", "x*y", "y^2"]),
    (["x*y - z", "y*z - x", "x*z - y"], XYZ, GREVLEX, ["z^3 - z", "x^2 - z^2", "x*y - z", "y^2 - z^2", "x*z - y", "y*z - x"]),
    (["x^2 + y^2 - 1", "x*y - 1"], XY, LEX, ["x + y^3 - y", "y^4 - y^2 + 1"]),
    (["x^2*y - 1", "x*y^2 - x"], XY, GREVLEX, ["x^2 - y", "y^2 - 1"]),
]


class TestGroebner:
    @pytest.mark.parametrize("gens,V,order,expected", FROZEN)
    def test_frozen_bases(self, gens, V, order, expected):
        got = Ideal.parse(gens, V).groebner(order)
        assert set(got) == {Polynomial.parse(e, V) for e in expected}

    def test_already_a_basis(self):
        assert set(Ideal.parse(["x", "y"], XY).groebner()) == {P("x"), P("y")}

    def test_cube_is_member(self):
        # y^3 is a member although the reduced basis carries y^2
        I = Ideal.parse(["x^2 - y", "x^3"], XY)
        assert I.contains(P("y^3")) and I.contains(P("y^2"))
        assert P("y") not in set(I.groebner(LEX))

    def test_normal_form_zero(self):
        I = Ideal.parse(["y", "x"], XY)
        assert normal_form(P("x^2 + y"), I.groebner()).is_zero

    def test_idempotent_and_deterministic(self):
        I = Ideal.parse(["x*y - z", "y*z - x", "x*z - y"], XYZ)
        b1 = I.groebner()
        b2 = Ideal(list(b1), XYZ).groebner()
        b3 = Ideal.parse(["x*y - z", "y*z - x", "x*z - y"], XYZ).groebner()
        assert b1 == b2 == b3

    def test_reduced(self):
        for order in (GREVLEX, LEX):
            B = Ideal.parse(["x^3 - 2*x*y", "x^2*y - 2*y^2 + x"], XY).groebner(order)
            lts = [b.leading_term(order)[0] for b in B]
            for i, a in enumerate(lts):
                for j, b in enumerate(lts):
                    if i != j:
                        assert not all(p <= q for p, q in zip(a, b))
            for b in B:
                assert b.leading_term(order)[1] == 1

    def test_generators_reduce_to_zero(self):
        I = Ideal.parse(["x^3 - 2*x*y", "x^2*y - 2*y^2 + x"], XY)
        B = I.groebner()
        assert all(normal_form(g, B).is_zero for g in I.generators)

    def test_s_polynomials_reduce(self):
        B = Ideal.parse(["x^3 - 2*x*y", "x^2*y - 2*y^2 + x"], XY).groebner()
        for i in range(len(B)):
            for j in range(i + 1, len(B)):
                assert normal_form(s_polynomial(B[i], B[j]), B).is_zero

    def test_budget(self):
        I = Ideal.parse(["x^3 - 2*x*y", "x^2*y - 2*y^2 + x"], XY)
        with pytest.raises(GroebnerBudgetError):
            I.groebner(budget=1)

    def test_zero_ideal(self):
        I = Ideal([], XY)
        assert I.groebner() == ()
        assert not I.contains(P("1"))
        assert I.contains(P("0"))

    def test_groebner_basis_returns_ideal(self):
        J = groebner_basis(Ideal.parse(["x^2 - y", "x^3"], XY), LEX)
        assert isinstance(J, Ideal) and len(J.generators) == 3

    def test_lex_variable_order(self):
        o = MonomialOrder("lex")
        assert o.key((1, 0)) > o.key((0, 5))


# ---------------------------------------------------------------- ideals


class TestIdeals:
    def test_member_examples(self):
        assert ideal_member(P("x^2 + y"), Ideal.parse(["x", "y"], XY))
        assert not ideal_member(P("1"), Ideal.parse(["x", "y"], XY))
        assert not ideal_member(P("y"), Ideal.parse(["x^2", "x*y", "y^2"], XY))

    def test_contains_examples(self):
        assert ideal_contains(Ideal.parse(["y"], XY), Ideal.parse(["x", "y"], XY))
        assert not ideal_contains(Ideal.parse(["1"], XY), Ideal.parse(["x", "y"], XY))
        assert ideal_contains(Ideal.parse(["x^3 + x*y^2"], XY), Ideal.parse(["x"], XY))

    def test_sum_examples(self):
        assert set(ideal_sum(Ideal.parse(["x"], XY), Ideal.parse(["y"], XY)).generators) == {P("x"), P("y")}
        assert ideal_sum(Ideal.parse(["x"], XY), Ideal([P("0")], XY)).generators == (P("x"),)
        s = ideal_sum(ideal_sum(Ideal.parse(["y"], XY), Ideal.parse(["x"], XY)), Ideal.parse(["1"], XY))
        assert s.is_unit

    def test_sum_prunes_duplicates(self):
        s = ideal_sum(Ideal.parse(["x", "y"], XY), Ideal.parse(["y"], XY))
        assert len(s.generators) == 2

    def test_product(self):
        J = ideal_product(Ideal.parse(["x"], XY), Ideal.parse(["x", "y"], XY))
        assert J.equals(Ideal.parse(["x^2", "x*y"], XY))

    def test_mixed_rings_rejected(self):
        with pytest.raises(ValueError):
            ideal_sum(Ideal.parse(["x"], XY), Ideal.parse(["x"], XYZ))


class TestOracle:
    def test_frozen_examples(self):
        I = Ideal.parse(["x^2", "x*y", "y^2"], XY)
        assert member(P("y"), I.generators) is False
        assert member(P("x^2*y + y^2"), I.generators) is True

    def test_random_agreement(self):
        rng = random.Random(11)
        for _ in range(40):
            I, f = random_membership_instance(rng)
            assert I.contains(f) == member(f, I.generators, 6), (I, f)

    def test_s_polynomials_of_random_bases(self):
        rng = random.Random(12)
        for _ in range(20):
            I, _ = random_membership_instance(rng)
            B = I.groebner()
            for i in range(len(B)):
                for j in range(i + 1, len(B)):
                    assert normal_form(s_polynomial(B[i], B[j]), B).is_zero


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_product_is_member(seed):
    from oracle import random_poly

    rng = random.Random(seed)
    g = [random_poly(rng, XY, 2, 2, nonconstant=True) for _ in range(2)]
    q = random_poly(rng, XY, 2, 2)
    I = Ideal(g, XY)
    assert I.contains(q * g[0] - g[1] * q)
