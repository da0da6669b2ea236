from math import factorial

import pytest
from hypothesis import given, strategies as st

from modlie import multiindex as mi


def fact_binom(a, b, p):
    """Oracle: prod a_i! / (b_i! (a_i - b_i)!) computed over the integers."""
    out = 1
    for x, y in zip(a, b):
        if y > x:
            return 0
        out *= factorial(x) // (factorial(y) * factorial(x - y))
    return out % p


def test_degree_examples():
    assert mi.degree(mi.zero(3)) == 0
    assert all(mi.degree(mi.eps(j, 4)) == 1 for j in range(1, 5))
    assert mi.degree(mi.tau(2, 3)) == 4


def test_binom_examples():
    a = (2, 1)
    assert mi.binom_mod_p(a, mi.zero(2), 3) == 1
    assert mi.binom_mod_p((2, 1), (1, 1), 3) == 2 == fact_binom((2, 1), (1, 1), 3)
    for p in (3, 5, 7):
        t = mi.tau(3, p)
        assert mi.binom_mod_p(t, mi.eps(1, 3), p) == p - 1 == fact_binom(t, mi.eps(1, 3), p)


def test_validate_and_render():
    assert mi.validate([1, 2], 2, 3) == (1, 2)
    with pytest.raises(ValueError):
        mi.validate((3, 0), 2, 3)
    with pytest.raises(ValueError):
        mi.validate((0,), 2, 3)
    assert mi.render((1, 0, 2)) == "x^(1,0,2)"


def test_enumeration_order():
    idx = mi.all_indices(2, 3)
    assert len(idx) == 9
    assert idx[0] == (0, 0) and idx[-1] == (2, 2)
    assert idx == sorted(idx, key=lambda a: (sum(a), a))


idx3 = st.tuples(st.sampled_from([3, 5, 7]), st.data())


@given(idx3)
def test_binom_matches_factorial_oracle(args):
    p, data = args
    n = data.draw(st.integers(1, 4))
    a = tuple(data.draw(st.integers(0, p - 1)) for _ in range(n))
    b = tuple(data.draw(st.integers(0, p - 1)) for _ in range(n))
    assert mi.binom_mod_p(a, b, p) == fact_binom(a, b, p)


@given(idx3)
def test_binom_absorption_identity(args):
    """b_j C(a, b) = a_j C(a - e_j, b - e_j)."""
    p, data = args
    n = data.draw(st.integers(1, 4))
    a = tuple(data.draw(st.integers(1, p - 1)) for _ in range(n))
    b = tuple(data.draw(st.integers(1, p - 1)) for _ in range(n))
    j = data.draw(st.integers(1, n))
    e = mi.eps(j, n)
    lhs = b[j - 1] * mi.binom_mod_p(a, b, p) % p
    rhs = a[j - 1] * mi.binom_mod_p(mi.sub(a, e), mi.sub(b, e), p) % p
    assert lhs == rhs


@given(idx3)
def test_addition_bounds(args):
    p, data = args
    n = data.draw(st.integers(1, 4))
    a = tuple(data.draw(st.integers(0, p - 1)) for _ in range(n))
    b = tuple(data.draw(st.integers(0, p - 1)) for _ in range(n))
    assert mi.fits(mi.add(a, b), p) == all(x + y <= p - 1 for x, y in zip(a, b))
    assert mi.degree(mi.add(a, b)) == mi.degree(a) + mi.degree(b)
    below = list(mi.iter_below(a))
    assert len(below) == __import__("math").prod(x + 1 for x in a)
