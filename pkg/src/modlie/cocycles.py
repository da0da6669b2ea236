"""Explicit cocycles: squares of derivations, Theta on S(n), chi_i and ad(x^tau)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import multiindex as mi
from .algebras import LieAlgebra, StructureError, WittAlgebra, D_ij, pair_brackets
from .cohomology import Cochain, CocycleError, cochain_action, differential
from .gf import inverse_table
from .modules import GModule, adjoint_module


class DerivationError(ValueError):
    """The matrix does not satisfy the Leibniz rule."""


def coordinates(g: LieAlgebra, vec) -> np.ndarray:
    """Coordinates in g's basis of a W(n)-vector lying in g (raises otherwise)."""
    p = g.p
    vec = np.asarray(vec) % p
    E = g.embedding
    piv = [int(np.nonzero(r)[0][0]) for r in E]
    c = vec[piv] % p
    if np.any((c @ E - vec) % p):
        raise StructureError(f"vector does not lie in {g.name}")
    return c


@dataclass
class DerivationMatrix:
    """A derivation of g; column u is the image of the basis element u."""

    algebra: LieAlgebra
    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        g = self.algebra
        self.matrix = np.asarray(self.matrix, dtype=np.int64) % g.p
        if self.matrix.shape != (g.dim, g.dim):
            raise DerivationError("derivation matrix has the wrong shape")
        bad = self.leibniz_defect()
        if bad:
            u, v = bad[0]
            raise DerivationError(f"{self.name or 'matrix'} is not a derivation: "
                                  f"fails on ({g.labels[u]}, {g.labels[v]})")

    def leibniz_defect(self) -> list[tuple[int, int]]:
        g, p = self.algebra, self.algebra.p
        G = self.matrix.T  # row u = image of e_u
        I = np.eye(g.dim, dtype=np.int64)
        us, vs = np.triu_indices(g.dim, k=1)
        _, _, br = pair_brackets(g, I, I, us, vs)
        lhs = br @ sparse.csr_matrix(self.matrix.T)
        _, _, a = pair_brackets(g, G, I, us, vs)
        _, _, b = pair_brackets(g, I, G, us, vs)
        diff = (lhs - a - b).tocsr()
        diff.data %= p
        diff.eliminate_zeros()
        rows = np.unique(diff.nonzero()[0])
        return [(int(us[r]), int(vs[r])) for r in rows]

    def power(self, i: int) -> np.ndarray:
        out = np.eye(self.algebra.dim, dtype=np.int64)
        for _ in range(i):
            out = out @ self.matrix % self.algebra.p
        return out


def inner_derivation(g: LieAlgebra, x, name: str = "") -> DerivationMatrix:
    return DerivationMatrix(g, g.ad(x), name)


def factorial_inverses(p: int) -> np.ndarray:
    """1 / (i! (p-i)!) mod p for i = 0..p."""
    inv = inverse_table(p)
    fact = [1]
    for i in range(1, p):
        fact.append(fact[-1] * i % p)
    out = np.zeros(p + 1, dtype=np.int64)
    for i in range(1, p):
        out[i] = inv[fact[i] * fact[p - i] % p]
    return out


def squaring(gamma: DerivationMatrix, M: GModule | None = None, name: str | None = None) -> Cochain:
    """Sq(gamma)(x, y) = sum_{0<i<p} [gamma^i x, gamma^{p-i} y] / (i! (p-i)!)."""
    g, p = gamma.algebra, gamma.algebra.p
    if M is None:
        M = adjoint_module(g)
    if M.algebra is not g or M.name != "adjoint":
        raise ValueError("squaring takes values in the adjoint module of the same algebra")
    coef = factorial_inverses(p)
    us, vs = np.triu_indices(g.dim, k=1)
    total = None
    for i in range(1, p):
        A = gamma.power(i).T
        B = gamma.power(p - i).T
        _, _, br = pair_brackets(g, A, B, us, vs)
        term = br * int(coef[i])
        total = term if total is None else total + term
    total = total.tocsr()
    total.data %= p
    total.eliminate_zeros()
    ent = {}
    for r in range(total.shape[0]):
        s, e = total.indptr[r], total.indptr[r + 1]
        for w, c in zip(total.indices[s:e], total.data[s:e]):
            ent[((int(us[r]), int(vs[r])), int(w))] = int(c)
    f = Cochain(g, M, 2, ent, name if name is not None else f"Sq({gamma.name})")
    if not differential(f).is_zero():
        raise CocycleError(f"{f.name} is not a cocycle")
    return f


def D_index(g: LieAlgebra, i: int) -> int:
    """Index of D_i among g's basis vectors."""
    W = g.ambient
    target = W.D(i)
    for u, row in enumerate(g.embedding):
        if np.array_equal(row % g.p, target):
            return u
    raise StructureError(f"D_{i} is not a basis vector of {g.name}")


def sq_D(g: LieAlgebra, i: int, M: GModule | None = None) -> Cochain:
    """Sq(D_i) as a 2-cocycle of g with adjoint coefficients."""
    u = D_index(g, i)
    gamma = inner_derivation(g, g.basis_vector(u), name=f"D_{i}")
    return squaring(gamma, M, name=f"Sq(D_{i})")


def change_values(f: Cochain, M2: GModule, L: np.ndarray, name: str | None = None) -> Cochain:
    """Compose f with the linear map L: M -> M2 (matrix M2.dim x M.dim)."""
    p = f.p
    L = np.asarray(L) % p
    ent: dict = {}
    for (sig, m), c in f.entries.items():
        for m2 in np.nonzero(L[:, m])[0]:
            key = (sig, int(m2))
            ent[key] = (ent.get(key, 0) + c * int(L[m2, m])) % p
    return Cochain(f.algebra, M2, f.k, ent, f.name if name is None else name)


def sq_D_into_W(S: LieAlgebra, i: int, MW: GModule) -> Cochain:
    """Sq(D_i) on S(n) with values in W(n) through the inclusion S(n) -> W(n)."""
    f = sq_D(S, i)
    g = change_values(f, MW, S.embedding.T)
    if not differential(g).is_zero():
        raise CocycleError(f"{g.name} is not a cocycle with values in W(n)")
    return g


def theta(S: LieAlgebra, M: GModule | None = None) -> Cochain:
    """Theta(D_i, D_j) = D_ij(x^tau), zero on all other pairs of basis vectors."""
    W: WittAlgebra = S.ambient
    n, p = W.n, W.p
    if S.name != "special":
        raise ValueError("Theta is defined on S(n)")
    if M is None:
        M = adjoint_module(S)
    xt = W.poly.monomial(mi.tau(n, p))
    ent = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            val = coordinates(S, D_ij(W, i, j, xt))
            for w in np.nonzero(val)[0]:
                ent[((D_index(S, i), D_index(S, j)), int(w))] = int(val[w])
    f = Cochain(S, M, 2, ent, "Theta")
    if not differential(f).is_zero():
        raise CocycleError("Theta is not a cocycle")
    for x in S.graded_component(0):
        if not cochain_action(S.basis_vector(x), f).is_zero():
            raise CocycleError(f"Theta is not invariant under {S.labels[x]}")
    return f


def _truncated_coords(M: GModule, f: np.ndarray) -> np.ndarray:
    """Coordinates of an A(n)-element in the basis of A(n)_{<tau} (asserting membership)."""
    P = M.algebra.ambient.poly
    top = P.index[mi.tau(P.n, P.p)]
    if f[top] % P.p:
        raise StructureError("value leaves A(n)_<tau")
    keep = [m for m in range(P.dim) if m != top]
    return f[keep] % P.p


def chi(S: LieAlgebra, i: int, M: GModule) -> Cochain:
    """chi_i(x^a D_k) = x^a x_i^{p-1} if k = i, else 0; values in A(n)_{<tau}."""
    W: WittAlgebra = S.ambient
    P = W.poly
    if M.name != "a_trunc" or M.algebra is not S:
        raise ValueError("chi takes values in the truncated module A(n)_<tau of S(n)")
    xi = P.monomial(tuple(P.p - 1 if r == i - 1 else 0 for r in range(P.n)))
    ent = {}
    for u, row in enumerate(S.embedding):
        f = W.coefficients(row)[i - 1]
        val = _truncated_coords(M, P.mul(f, xi))
        for m in np.nonzero(val)[0]:
            ent[((u,), int(m))] = int(val[m])
    out = Cochain(S, M, 1, ent, f"chi_{i}")
    if not differential(out).is_zero():
        raise CocycleError(f"chi_{i} is not a cocycle")
    return out


def ad_xtau(S: LieAlgebra, M: GModule) -> Cochain:
    """E -> E(x^tau), a 1-cocycle of S(n) with values in A(n)_{<tau}."""
    W: WittAlgebra = S.ambient
    P = W.poly
    if M.name != "a_trunc" or M.algebra is not S:
        raise ValueError("ad(x^tau) takes values in the truncated module A(n)_<tau of S(n)")
    xt = P.monomial(mi.tau(P.n, P.p))
    ent = {}
    for u, row in enumerate(S.embedding):
        val = _truncated_coords(M, W.apply(row, xt))
        for m in np.nonzero(val)[0]:
            ent[((u,), int(m))] = int(val[m])
    out = Cochain(S, M, 1, ent, "ad_x_tau")
    if not differential(out).is_zero():
        raise CocycleError("ad(x^tau) is not a cocycle")
    return out
