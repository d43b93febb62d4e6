import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import coeffs, naive_compose, naive_mul
from twistconj.f2poly import (
    DimensionError,
    Endo,
    TruncPoly,
    endo_apply_poly,
    poly_add,
    poly_compose,
    poly_mul,
    poly_random,
)


def P(n, *exps):
    return TruncPoly(n, sum(1 << e for e in exps))


@st.composite
def polys(draw, count=1, zero_constant=()):
    n = draw(st.integers(1, 64))
    out = []
    for i in range(count):
        v = draw(st.integers(0, (1 << n) - 1))
        if i in zero_constant:
            v &= ~1
        out.append(TruncPoly(n, v))
    return out


# --- examples ---------------------------------------------------------------


def test_add_examples():
    assert poly_add(P(4, 0, 1), P(4, 1, 2)) == P(4, 0, 2)
    p = P(7, 0, 3, 6)
    assert p + p == TruncPoly.zero(7)
    assert TruncPoly.zero(7) + p == p


def test_mul_examples():
    assert poly_mul(P(4, 0, 1), P(4, 0, 1, 2)) == P(4, 0, 3)
    p = P(9, 1, 4, 8)
    assert TruncPoly.one(9) * p == p
    for n in (1, 2, 5, 64, 300):
        assert P(n, n - 1) * TruncPoly.x(n) == TruncPoly.zero(n)


def test_mul_matches_schoolbook():
    rng = random.Random(3)
    for n in (1, 7, 24, 25, 64, 100, 300):
        for _ in range(20):
            a, b = poly_random(n, None, rng), poly_random(n, None, rng)
            assert coeffs(a * b) == naive_mul(coeffs(a), coeffs(b))


def test_compose_examples():
    f = P(6, 0, 2, 5)
    assert poly_compose(f, TruncPoly.x(6)) == f
    g = P(6, 1, 3)
    assert poly_compose(TruncPoly.x(6), g) == g
    assert poly_compose(P(4, 2), P(4, 1, 2)) == P(4, 2)
    assert coeffs(P(4, 2)(P(4, 1, 2))) == naive_compose([0, 0, 1, 0], [0, 1, 1, 0])


def test_compose_matches_naive():
    rng = random.Random(4)
    for n in (1, 3, 16, 40):
        for _ in range(10):
            f = poly_random(n, None, rng)
            g = poly_random(n, None, rng)
            assert coeffs(poly_compose(f, g)) == naive_compose(coeffs(f), coeffs(g))


def test_endo_examples():
    e = Endo(P(4, 2))
    assert endo_apply_poly(e, TruncPoly.x(4)) == P(4, 2)
    assert endo_apply_poly(e, TruncPoly.one(4)) == TruncPoly.one(4)
    assert endo_apply_poly(Endo(P(4, 1, 2)), P(4, 2)) == P(4, 2)


def test_endo_rejects_constant_term():
    with pytest.raises(ValueError):
        Endo(P(4, 0, 1))


@pytest.mark.parametrize(
    "op",
    [poly_add, poly_mul, poly_compose, lambda a, b: endo_apply_poly(Endo(TruncPoly(a.n, 2 & a.mask)), b)],
)
def test_dimension_mismatch(op):
    with pytest.raises(DimensionError):
        op(TruncPoly(3, 1), TruncPoly(4, 1))


def test_value_range_checked():
    with pytest.raises(ValueError):
        TruncPoly(3, 8)
    with pytest.raises(ValueError):
        TruncPoly(0, 0)


def test_random_policies():
    assert poly_random(1, 1, random.Random(0)) == TruncPoly.one(1)
    assert poly_random(1, 0, random.Random(0)) == TruncPoly.zero(1)
    rng = random.Random(5)
    for _ in range(200):
        assert poly_random(20, 1, rng).coeff(0) == 1
        assert poly_random(20, 0, rng).coeff(0) == 0
    assert poly_random(300, None, random.Random(9)) == poly_random(300, None, random.Random(9))


def test_random_weight_statistics():
    rng = random.Random(11)
    samples = 2000
    total = sum(poly_random(300, 1, rng).weight() - 1 for _ in range(samples))
    mean = total / samples
    assert abs(mean - 149.5) <= 0.05 * 149.5


def test_bits_roundtrip():
    p = TruncPoly.from_bits([1, 0, 1, 1, 0])
    assert p.n == 5 and p.value == 0b1101 and p.bits == (1, 0, 1, 1, 0)
    assert str(p) == "1 + x^2 + x^3"


# --- properties ---------------------------------------------------------------

CASES = settings(max_examples=1000, deadline=None)


@CASES
@given(polys(3))
def test_ring_laws(ps):
    a, b, c = ps
    n = a.n
    zero, one = TruncPoly.zero(n), TruncPoly.one(n)
    assert a + b == b + a
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + zero == a and a * one == a and a * zero == zero


@CASES
@given(polys(2))
def test_frobenius(ps):
    a, b = ps
    assert (a + b) * (a + b) == a * a + b * b


@CASES
@given(polys(3, zero_constant=(2,)))
def test_endomorphism_laws(ps):
    a, b, p = ps
    e = Endo(p)
    assert endo_apply_poly(e, a * b) == endo_apply_poly(e, a) * endo_apply_poly(e, b)
    assert endo_apply_poly(e, a + b) == endo_apply_poly(e, a) + endo_apply_poly(e, b)
    assert endo_apply_poly(e, a) == poly_compose(a, p)


@CASES
@given(polys(3, zero_constant=(1, 2)))
def test_compose_associative(ps):
    f, g, h = ps
    assert poly_compose(poly_compose(f, g), h) == poly_compose(f, poly_compose(g, h))


@CASES
@given(polys(2, zero_constant=(1,)), st.data())
def test_valuation_triangularity(ps, data):
    f, g = ps
    n = f.n
    d = data.draw(st.integers(0, n - 1))
    noise = data.draw(st.integers(0, (1 << n) - 1)) >> (d + 1) << (d + 1)
    low = (1 << (d + 1)) - 1
    perturbed = TruncPoly(n, f.value ^ noise)
    assert poly_compose(perturbed, g).value & low == poly_compose(f, g).value & low
