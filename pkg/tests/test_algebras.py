import json
from pathlib import Path

import numpy as np
import pytest

from modlie import multiindex as mi
from modlie.algebras import (LieAlgebra, D_ij, build_A, build_S, build_W, commutator_span,
                             degree_zero, divergence, p_power, subalgebra)
from modlie.gf import SparseMatrix, rank as sparse_rank, rref

from conftest import oracle_rank, special, witt

GOLDEN = Path(__file__).parent / "golden"


def rank(A, p):
    return sparse_rank(SparseMatrix.from_dense(np.asarray(A), p))


def _rand_poly(P, rng, density=0.3):
    f = rng.integers(0, P.p, P.dim)
    f[rng.random(P.dim) > density] = 0
    return f


def _rand_elem(g, rng):
    return rng.integers(0, g.p, g.dim)


def _rand_in(rows, p, rng):
    c = rng.integers(0, p, len(rows))
    return c @ rows % p


# -- A(n) -------------------------------------------------------------------


def test_build_A_dimensions():
    assert build_A(1, 3).dim == 3
    assert build_A(2, 5).dim == 25
    assert build_A(3, 3).dim == 27


def test_A_truncation_and_product():
    P = build_A(1, 5)
    assert not P.mul(P.monomial((4,)), P.x(1)).any()
    P = build_A(2, 3)
    assert np.array_equal(P.mul(P.monomial((1, 0)), P.monomial((1, 2))), P.monomial((2, 2)))
    assert not P.mul(P.monomial((2, 1)), P.monomial((1, 0))).any()


@pytest.mark.parametrize("p", [2, 4, 9, 1])
def test_bad_primes_rejected(p):
    with pytest.raises(ValueError):
        build_A(1, p)
    with pytest.raises(ValueError):
        build_W(1, p)


# -- W(n) -------------------------------------------------------------------


@pytest.mark.parametrize("n,p", [(1, 3), (1, 5), (1, 7), (2, 3), (2, 5), (3, 3)])
def test_W_dimension(n, p):
    assert witt(n, p).dim == n * p ** n


def test_W_bracket_matches_operator_commutator(rng):
    # oracle: compose the derivations as operators on A(n) and re-read the result
    for n, p in [(1, 5), (2, 3), (3, 3)]:
        W = witt(n, p)
        ops = W.operator_matrices
        for _ in range(40):
            u, v = rng.integers(0, W.dim, 2)
            comm = (ops[u] @ ops[v] - ops[v] @ ops[u]) % p
            assert np.array_equal(W.operator(W.bracket_basis(u, v)), comm)


def test_W_D_i_bracket():
    W = witt(2, 5)
    for a in mi.all_indices(2, 5):
        for j in (1, 2):
            for i in (1, 2):
                got = W.bracket(W.D(i), W.element(a, j))
                want = np.zeros(W.dim, dtype=np.int64)
                if a[i - 1]:
                    want = a[i - 1] * W.element(mi.sub(a, mi.eps(i, 2)), j) % 5
                assert np.array_equal(got, want)


def test_W_xi2_bracket():
    n, p = 2, 5
    W = witt(n, p)
    for r in (1, 2):
        sq = W.element(tuple(2 if k == r - 1 else 0 for k in range(n)), r)
        for b in mi.all_indices(n, p):
            got = W.bracket(sq, W.element(b, r))
            c = mi.add(b, mi.eps(r, n))
            want = np.zeros(W.dim, dtype=np.int64)
            if mi.fits(c, p):
                want = (b[r - 1] - 2) * W.element(c, r) % p
            assert np.array_equal(got, want)


def test_W_graded_components():
    W = witt(2, 3)
    assert len(W.graded_component(-1)) == 2
    assert len(W.graded_component(0)) == 4
    top = W.graded_component(3)
    assert sorted(W.labels[u] for u in top) == sorted(W.labels[W.index[((2, 2), j)]] for j in (1, 2))
    assert W.degree_range() == (-1, 3)
    assert W.graded_component(4) == [] and W.graded_component(-2) == []
    for n, p in [(1, 7), (3, 3)]:
        W = witt(n, p)
        assert W.degree_range() == (-1, n * (p - 1) - 1)
        assert len(W.graded_component(0)) == n * n


@pytest.mark.parametrize("n,p", [(1, 3), (1, 5), (1, 7), (2, 3), (2, 5), (3, 3)])
def test_W_weight_fibers(n, p):
    W = witt(n, p)
    fibers = W.weight_decomposition()
    assert len(fibers) == p ** n
    assert all(len(v) == n for v in fibers.values())


def test_W_torus():
    W = witt(2, 3)
    W.check_torus()
    for u in range(W.dim):
        for i in range(1, 3):
            e = W.basis_vector(u)
            assert np.array_equal(W.bracket(W.h(i), e), W.weights[u][i - 1] * e % 3)


# -- divergence, D_ij ---------------------------------------------------------


def test_divergence_examples():
    W = witt(2, 5)
    P = W.poly
    assert np.array_equal(divergence(W, W.h(1)), P.one())
    tau = mi.tau(2, 5)
    assert np.array_equal(divergence(W, W.element(tau, 1)), -P.monomial(mi.sub(tau, mi.eps(1, 2))) % 5)


def test_D_ij_examples(rng):
    W = witt(3, 3)
    P = W.poly
    assert np.array_equal(D_ij(W, 1, 2, P.x(1)), -W.D(2) % 3)
    assert not D_ij(W, 1, 2, P.one()).any()
    x1x2 = P.monomial((1, 1, 0))
    assert np.array_equal(D_ij(W, 1, 2, x1x2), (W.h(1) - W.h(2)) % 3)
    for _ in range(20):
        f = _rand_poly(P, rng)
        i, j = rng.integers(1, 4, 2)
        assert not D_ij(W, i, i, f).any()
        assert np.array_equal(D_ij(W, i, j, f), -D_ij(W, j, i, f) % 3)
        assert not divergence(W, D_ij(W, i, j, f)).any()


def test_divergence_of_bracket(rng):
    for n, p in [(2, 3), (2, 5), (3, 3)]:
        W = witt(n, p)
        for _ in range(1000 // 3):
            D, E = _rand_elem(W, rng), _rand_elem(W, rng)
            lhs = divergence(W, W.bracket(D, E))
            rhs = (W.apply(D, divergence(W, E)) - W.apply(E, divergence(W, D))) % p
            assert np.array_equal(lhs, rhs)


def test_divergence_image_is_truncated():
    # div(W(n)) is spanned by all monomials except x^tau
    for n, p in [(2, 3), (3, 3)]:
        W = witt(n, p)
        img = np.array([divergence(W, W.basis_vector(u)) for u in range(W.dim)])
        top = W.poly.index[mi.tau(n, p)]
        assert not img[:, top].any()
        assert rank(img, p) == p ** n - 1


# -- S(n) -------------------------------------------------------------------


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5), (4, 3)])
def test_S_dimensions(n, p):
    Sp, S = special(n, p)
    assert S.dim == (n - 1) * (p ** n - 1)
    assert Sp.dim - S.dim == n
    assert len(S.graded_component(0)) == n * n - 1
    W = S.ambient
    for row in Sp.embedding:
        assert not divergence(W, row).any()


def test_S_requires_n_at_least_3():
    with pytest.raises(ValueError, match="n >= 3"):
        build_S(2, 3)


def test_S_spanned_by_D_ij():
    n, p = 3, 3
    _, S = special(n, p)
    W = S.ambient
    gens = [D_ij(W, i, j, W.poly.monomial(a))
            for a in mi.all_indices(n, p) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    R, _ = rref(np.array(gens), p)
    R2, _ = rref(S.embedding, p)
    assert R.shape[0] == S.dim
    assert np.array_equal(R, R2)


def test_Sprime_mod_S_spanned_by_top_elements():
    n, p = 3, 3
    Sp, S = special(n, p)
    W = S.ambient
    tau = mi.tau(n, p)
    extra = [W.element(tuple(p - 1 if k != i - 1 else 0 for k in range(n)), i) for i in range(1, n + 1)]
    assert all(tau[i - 1] == p - 1 for i in range(1, n + 1))
    stacked = np.vstack([S.embedding] + extra)
    assert rank(stacked, p) == Sp.dim


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5), (4, 3)])
def test_S_weight_fibers(n, p):
    _, S = special(n, p)
    fibers = S.weight_decomposition()
    zero = S.zero_weight()
    assert len(fibers[zero]) == (n - 1) * (p - 1)
    assert all(len(v) == (n - 1) * p for w, v in fibers.items() if w != zero)
    assert len(fibers) == p ** (n - 1)


@pytest.mark.parametrize("n,p", [(3, 3), (3, 5), (4, 3)])
def test_S_cartan_generators_span_zero_fiber(n, p):
    _, S = special(n, p)
    W = S.ambient
    gens = []
    for a in range(p - 1):
        for j in range(2, n + 1):
            b = tuple(a + (1 if k in (0, j - 1) else 0) for k in range(n))
            gens.append(D_ij(W, 1, j, W.poly.monomial(b)))
    fiber = S.embedding[S.weight_decomposition()[S.zero_weight()]]
    assert rank(np.array(gens), p) == len(fiber)
    assert rank(np.vstack([fiber, gens]), p) == len(fiber)


def test_S_torus_and_sl():
    _, S = special(3, 3)
    S.check_torus()
    sl = degree_zero(S)
    assert sl.name == "sl" and sl.dim == 8
    assert not sl.jacobi_defect()
    gl = degree_zero(witt(2, 3))
    assert gl.name == "gl" and gl.dim == 4


def test_S_bracket_formula(rng):
    # 1000 samples: sparse random elements of S'(n), each a combination of 3 basis vectors
    for (n, p), count in [((3, 3), 600), ((3, 5), 400)]:
        Sp, _ = special(n, p)
        W = Sp.ambient
        P = W.poly
        for _ in range(count):
            E, F = (_rand_in(Sp.embedding[rng.choice(Sp.dim, 3, replace=False)], p, rng)
                    for _ in range(2))
            fs, gs = W.coefficients(E), W.coefficients(F)
            want = np.zeros(W.dim, dtype=np.int64)
            for i in range(1, n + 1):
                for j in range(1, n + 1):
                    if fs[i - 1].any() and gs[j - 1].any():
                        want -= D_ij(W, i, j, P.mul(fs[i - 1], gs[j - 1]))
            assert np.array_equal(W.bracket(E, F), want % p)


def test_D_ij_bracket_formula(rng):
    for n, p in [(3, 3), (3, 5)]:
        W = witt(n, p)
        P = W.poly
        for _ in range(500):
            f, g = _rand_poly(P, rng, 0.1), _rand_poly(P, rng, 0.1)
            i, j = rng.choice(np.arange(1, n + 1), 2, replace=False)
            lhs = W.bracket(D_ij(W, i, j, f), D_ij(W, i, j, g))
            rhs = D_ij(W, i, j, W.apply(D_ij(W, i, j, f), g))
            assert np.array_equal(lhs, rhs)


# -- Lie axioms, grading ------------------------------------------------------


@pytest.mark.parametrize("which", ["W13", "W15", "W17", "W23", "W25", "S33"])
def test_jacobi_exhaustive(which):
    g = special(3, 3)[1] if which == "S33" else witt(int(which[1]), int(which[2]))
    assert g.dim <= 60
    assert g.antisymmetry_defect() == []
    assert g.jacobi_defect() == []


@pytest.mark.parametrize("which", ["W33", "S35", "S43", "Sp33"])
def test_jacobi_random(which, rng):
    g = {"W33": lambda: witt(3, 3), "S35": lambda: special(3, 5)[1],
         "S43": lambda: special(4, 3)[1], "Sp33": lambda: special(3, 3)[0]}[which]()
    triples = [tuple(int(x) for x in rng.integers(0, g.dim, 3)) for _ in range(300)]
    assert g.jacobi_defect(triples) == []


def test_jacobi_detects_corruption():
    W = witt(2, 3)
    br = dict(W.brackets)
    key = next(iter(br))
    w, c = br[key][0]
    br[key] = [(w, (c + 1) % 3)] + br[key][1:]
    bad = LieAlgebra(name="custom", p=3, labels=W.labels, degrees=W.degrees, weights=W.weights,
                     brackets=br, n=2)
    assert bad.jacobi_defect()


@pytest.mark.parametrize("which", ["W23", "W33", "S33", "S35"])
def test_grading_additive(which):
    g = special(3, int(which[2]))[1] if which[0] == "S" else witt(int(which[1]), int(which[2]))
    for (u, v), terms in g.brackets.items():
        for w, _ in terms:
            assert g.degrees[w] == g.degrees[u] + g.degrees[v]
            assert np.array_equal(g.weights[w], (g.weights[u] + g.weights[v]) % g.p)
            assert np.array_equal(g.multidegrees[w], g.multidegrees[u] + g.multidegrees[v])


# -- p-power ------------------------------------------------------------------


def test_p_power_examples():
    for n, p in [(1, 5), (2, 3), (3, 3)]:
        W = witt(n, p)
        for i in range(1, n + 1):
            assert not p_power(W, W.D(i)).any()
            assert np.array_equal(p_power(W, W.h(i)), W.h(i))


def test_restrictedness(rng):
    cases = [(2, 3), (1, 7), (3, 3), (2, 5)]
    for t in range(100):
        W = witt(*cases[t % len(cases)])
        E = _rand_elem(W, rng)
        A = W.ad(E)
        Ap = np.eye(W.dim, dtype=np.int64)
        for _ in range(W.p):
            Ap = Ap @ A % W.p
        assert np.array_equal(W.ad(p_power(W, E)), Ap)


# -- commutators ----------------------------------------------------------------


def test_commutator_span_W():
    W = witt(2, 3)
    for d in range(0, 3):
        R = commutator_span(W, d)
        assert R.shape[0] == len(W.graded_component(d + 1))
    W = witt(1, 5)
    assert commutator_span(W, 1).shape[0] < len(W.graded_component(2))
    assert commutator_span(W, 2).shape[0] == len(W.graded_component(3))


def test_commutator_span_S():
    _, S = special(3, 3)
    assert commutator_span(S, -1).shape[0] == len(S.graded_component(0))
    for d in range(0, 3):
        assert commutator_span(S, d).shape[0] == len(S.graded_component(d + 1))


# -- subalgebras, serialization --------------------------------------------------


def test_subalgebra_rejects_nonclosed():
    W = witt(2, 3)
    with pytest.raises(AssertionError):
        subalgebra(W, [W.index[((0, 0), 1)], W.index[((2, 0), 1)]])


def test_json_roundtrip_and_golden():
    W = witt(1, 3)
    text = W.to_json()
    again = LieAlgebra.from_json(text)
    assert again.to_json() == text
    # hand-checked: [D, xD] = D, [D, x^2D] = 2xD, [xD, x^2D] = x^2D
    assert W.brackets == {(0, 1): [(0, 1)], (0, 2): [(1, 2)], (1, 2): [(2, 1)]}
    path = GOLDEN / "witt_1_3.json"
    assert json.loads(path.read_text()) == json.loads(text)


def test_json_roundtrip_special():
    _, S = special(3, 3)
    again = LieAlgebra.from_json(S.to_json())
    assert again.brackets == S.brackets
    assert again.jacobi_defect() == []


def test_oracle_rank_agrees_on_S_embedding():
    _, S = special(3, 3)
    assert oracle_rank(S.embedding.tolist(), 3) == S.dim
