import json
import math

import numpy as np
import pytest

from modlie import multiindex as mi
from modlie.algebras import D_ij
from modlie.cocycles import (DerivationError, DerivationMatrix, ad_xtau, change_values, chi,
                             coordinates, factorial_inverses, inner_derivation, sq_D,
                             sq_D_into_W, squaring, theta)
from modlie.cohomology import classes_independent, differential, is_cocycle
from modlie.modules import adjoint_module, restriction_module, truncated_module

from conftest import special, witt


def _mono(n, **powers):
    return tuple(powers.get(f"x{i}", 0) for i in range(1, n + 1))


def _value(f, x, y):
    """f(x, y) for W(n)-vectors x, y lying in f's algebra; result as a W(n)-vector."""
    g = f.algebra
    out = f.evaluate([coordinates(g, x), coordinates(g, y)])
    return out @ g.embedding % g.p


def test_factorial_inverses():
    for p in (3, 5, 7, 11):
        tab = factorial_inverses(p)
        for i in range(1, p):
            assert tab[i] * math.factorial(i) * math.factorial(p - i) % p == 1


@pytest.mark.parametrize("n,p", [(1, 5), (1, 7), (2, 3), (2, 5), (3, 3)])
def test_sq_values_on_witt(n, p):
    W = witt(n, p)
    M = adjoint_module(W)
    sqs = {i: sq_D(W, i, M) for i in range(1, n + 1)}
    for r in range(1, n + 1):
        for s in range(1, n + 1):
            a = mi.add(mi.eps(r, n), mi.eps(r, n))
            b = mi.add(tuple((p - 2) * x for x in mi.eps(r, n)), mi.eps(s, n))
            if not mi.fits(b, p):
                continue
            x, y = W.element(a, s), W.element(b, s)
            for i in range(1, n + 1):
                got = _value(sqs[i], x, y)
                if i == r != s:
                    want = W.D(s)
                elif i == r == s:
                    want = -3 * W.D(i) % p
                else:
                    want = np.zeros(W.dim, dtype=np.int64)
                assert np.array_equal(got, want), (r, s, i)


@pytest.mark.parametrize("n,p", [(2, 3), (2, 5), (3, 3)])
def test_sq_value_mixed_pair(n, p):
    W = witt(n, p)
    for i in range(1, n + 1):
        f = sq_D(W, i)
        for j in range(1, n + 1):
            if j == i:
                continue
            x = W.element(mi.eps(i, n), j)
            b = mi.add(tuple((p - 1) * t for t in mi.eps(i, n)), mi.eps(j, n))
            assert np.array_equal(_value(f, x, W.element(b, j)), W.D(j))


def test_sq_vanishes_on_W13():
    W = witt(1, 3)
    f = sq_D(W, 1)
    assert f.is_zero()
    assert classes_independent([f]) == (False, 0)


def test_sq_cocycle_for_many_derivations(rng):
    W = witt(2, 3)
    M = adjoint_module(W)
    for i in (1, 2):
        assert is_cocycle(squaring(inner_derivation(W, W.D(i)), M))
        assert is_cocycle(squaring(inner_derivation(W, W.h(i)), M))
    for _ in range(5):
        assert is_cocycle(squaring(inner_derivation(W, rng.integers(0, 3, W.dim)), M))


def test_sq_of_outer_derivation_of_S():
    # ad(h_1) normalizes S(n) without lying in it
    _, S = special(3, 3)
    W = S.ambient
    images = np.array([coordinates(S, W.bracket(W.h(1), row)) for row in S.embedding])
    gamma = DerivationMatrix(S, images.T, name="ad(h_1)")
    assert is_cocycle(squaring(gamma))


def test_non_derivation_rejected():
    W = witt(2, 3)
    bad = np.zeros((W.dim, W.dim), dtype=np.int64)
    bad[0, 0] = 1
    with pytest.raises(DerivationError, match="not a derivation"):
        DerivationMatrix(W, bad, name="E00")
    with pytest.raises(DerivationError, match="shape"):
        DerivationMatrix(W, np.zeros((3, 3)))


def test_sq_independence_on_witt():
    for n, p in [(2, 3), (1, 5)]:
        W = witt(n, p)
        M = adjoint_module(W)
        assert classes_independent([sq_D(W, i, M) for i in range(1, n + 1)]) == (True, n)


# -- S(n) ------------------------------------------------------------------------


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5)])
def test_separating_values_on_S(n, p):
    _, S = special(n, p)
    W = S.ambient
    P = W.poly
    M = adjoint_module(S)
    cocycles = {f"Sq{i}": sq_D(S, i, M) for i in range(1, n + 1)}
    cocycles["Theta"] = theta(S, M)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                continue
            x = W.element(mi.eps(i, n), j)
            m = tuple((p - 1 if t == i - 1 else 0) + (2 if t == j - 1 else 0) for t in range(n))
            y = D_ij(W, j, i, P.monomial(m))
            top = D_ij(W, i, j, P.monomial(mi.tau(n, p)))
            for name, f in cocycles.items():
                want = -2 * W.D(i) % p if name == f"Sq{i}" else np.zeros(W.dim, dtype=np.int64)
                assert np.array_equal(_value(f, x, y), want), (name, i, j)
                want = top if name == "Theta" else np.zeros(W.dim, dtype=np.int64)
                assert np.array_equal(_value(f, W.D(i), W.D(j)), want), (name, i, j)


def test_theta_values():
    n, p = 3, 3
    _, S = special(n, p)
    W = S.ambient
    f = theta(S)
    xt = W.poly.monomial(mi.tau(n, p))
    assert np.array_equal(_value(f, W.D(1), W.D(2)), D_ij(W, 1, 2, xt))
    assert not _value(f, W.D(1), W.element(mi.eps(1, n), 2)).any()
    assert not _value(f, W.D(2), W.D(2)).any()
    assert f.name == "Theta"
    assert json.loads(f.to_json())["name"] == "Theta"


def test_theta_cocycle_term_by_term():
    n, p = 3, 5
    _, S = special(n, p)
    W = S.ambient
    P = W.poly
    tau = mi.tau(n, p)
    terms = []
    for (i, j, k), sign in [((1, 2, 3), 1), ((2, 1, 3), -1), ((3, 1, 2), 1)]:
        lhs = W.bracket(W.D(i), D_ij(W, j, k, P.monomial(tau)))
        assert np.array_equal(lhs, -D_ij(W, j, k, P.monomial(mi.sub(tau, mi.eps(i, n)))) % p)
        terms.append(sign * lhs)
    assert not (sum(terms) % p).any()
    dT = differential(theta(S))
    D1, D2, D3 = (coordinates(S, W.D(i)) for i in (1, 2, 3))
    assert not dT.evaluate([D1, D2, D3]).any()
    assert dT.is_zero()


def test_sq_into_W():
    _, S = special(3, 3)
    MW = restriction_module(S)
    for i in (1, 2, 3):
        f = sq_D_into_W(S, i, MW)
        assert f.module is MW and is_cocycle(f)


def test_change_values_roundtrip():
    W = witt(2, 3)
    M = adjoint_module(W)
    f = sq_D(W, 1, M)
    g = change_values(f, M, np.eye(W.dim, dtype=np.int64) * 2)
    assert g == f.scale(2)


# -- chi_i and ad(x^tau) -------------------------------------------------------------


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5)])
def test_chi_and_ad_xtau_values(n, p, rng):
    _, S = special(n, p)
    W = S.ambient
    P = W.poly
    T = truncated_module(S)
    top = P.index[mi.tau(n, p)]
    keep = [m for m in range(P.dim) if m != top]

    def as_poly(v):
        out = np.zeros(P.dim, dtype=np.int64)
        out[keep] = v
        return out

    chis = {i: chi(S, i, T) for i in range(1, n + 1)}
    ad = ad_xtau(S, T)
    for i in range(1, n + 1):
        Di = coordinates(S, W.D(i))
        xi = tuple(p - 1 if t == i - 1 else 0 for t in range(n))
        assert np.array_equal(as_poly(chis[i].evaluate([Di])), P.monomial(xi))
        assert np.array_equal(as_poly(ad.evaluate([Di])),
                              -P.monomial(mi.sub(mi.tau(n, p), mi.eps(i, n))) % p)
        for k in range(1, n + 1):
            if k != i:
                assert not chis[i].evaluate([coordinates(S, W.D(k))]).any()
    # general elements: chi_i(sum f_k D_k) = f_i x_i^{p-1}
    for _ in range(20):
        c = rng.integers(0, p, S.dim)
        E = c @ S.embedding % p
        fs = W.coefficients(E)
        for i in range(1, n + 1):
            xi = P.monomial(tuple(p - 1 if t == i - 1 else 0 for t in range(n)))
            assert np.array_equal(as_poly(chis[i].evaluate([c])), P.mul(fs[i - 1], xi))
        assert np.array_equal(as_poly(ad.evaluate([c])), W.apply(E, P.monomial(mi.tau(n, p))))
    assert [chis[i].name for i in (1, 2)] == ["chi_1", "chi_2"]
    assert ad.name == "ad_x_tau"


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5)])
def test_chi_classes_independent(n, p):
    _, S = special(n, p)
    T = truncated_module(S)
    fs = [chi(S, i, T) for i in range(1, n + 1)] + [ad_xtau(S, T)]
    assert classes_independent(fs) == (True, n + 1)


def test_chi_needs_truncated_module():
    _, S = special(3, 3)
    with pytest.raises(ValueError, match="truncated"):
        chi(S, 1, adjoint_module(S))
    with pytest.raises(ValueError, match="S\\(n\\)"):
        theta(witt(3, 3))
