"""Cartan-type Lie algebras over F_p as explicit structure-constant objects.

``W(n)`` is built on the monomial basis ``x^a D_j``.  ``S'(n)`` and ``S(n)`` are
computed inside ``W(n)`` (kernel of the divergence, then the derived algebra)
rather than written down by hand; their basis vectors are echelonized inside
each (torus weight, degree) block of ``W(n)`` so every basis element is a
homogeneous weight vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from . import multiindex as mi
from .gf import SparseMatrix, check_prime, rank_nullspace, rref


class StructureError(AssertionError):
    """A construction produced data violating a structural invariant."""


# ---------------------------------------------------------------------------
# A(n)
# ---------------------------------------------------------------------------


class TruncatedPolyAlgebra:
    """A(n) = F_p[x_1..x_n]/(x_1^p..x_n^p) on its monomial basis."""

    def __init__(self, n: int, p: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)
        self.p = check_prime(p)
        self.basis = mi.all_indices(self.n, self.p)
        self.index = {a: i for i, a in enumerate(self.basis)}
        self.degrees = np.array([sum(a) for a in self.basis], dtype=np.int64)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def monomial(self, a) -> np.ndarray:
        v = np.zeros(self.dim, dtype=np.int64)
        v[self.index[tuple(a)]] = 1
        return v

    def one(self) -> np.ndarray:
        return self.monomial(mi.zero(self.n))

    def x(self, i: int) -> np.ndarray:
        return self.monomial(mi.eps(i, self.n))

    def mul(self, f, g) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        for i in np.nonzero(f)[0]:
            a = self.basis[i]
            for j in np.nonzero(g)[0]:
                c = mi.add(a, self.basis[j])
                if mi.fits(c, self.p):
                    out[self.index[c]] += f[i] * g[j]
        return out % self.p

    def partial(self, i: int, f) -> np.ndarray:
        """D_i(f); ``i`` is 1-based."""
        out = np.zeros(self.dim, dtype=np.int64)
        for k in np.nonzero(f)[0]:
            a = self.basis[k]
            if a[i - 1]:
                out[self.index[mi.sub(a, mi.eps(i, self.n))]] += a[i - 1] * f[k]
        return out % self.p

    def render(self, f) -> str:
        terms = [f"{int(f[k])}*{mi.render(self.basis[k])}" for k in np.nonzero(f)[0]]
        return " + ".join(terms) if terms else "0"


def build_A(n: int, p: int) -> TruncatedPolyAlgebra:
    return TruncatedPolyAlgebra(n, p)


# ---------------------------------------------------------------------------
# generic structure-constant Lie algebra
# ---------------------------------------------------------------------------


@dataclass
class LieAlgebra:
    """Lie algebra over F_p given by sparse structure constants.

    ``brackets[(u, v)]`` for ``u < v`` lists ``(w, c)`` with
    ``[e_u, e_v] = sum c e_w``.  ``weights[u]`` is the eigenvalue vector of
    the torus on ``e_u``; when ``torus_inside`` is set, ``torus`` holds the
    coordinates of torus elements lying in the algebra itself.
    """

    name: str
    p: int
    labels: list[str]
    degrees: np.ndarray
    weights: np.ndarray
    brackets: dict
    torus: list[np.ndarray] = field(default_factory=list)
    torus_inside: bool = True
    n: int = 0
    # coordinates of the basis inside W(n) (rows), when applicable
    embedding: np.ndarray | None = None
    ambient: "LieAlgebra | None" = None
    # ambient torus weights (eigenvalues of h_1..h_n) and the map to ``weights``
    ambient_weights: np.ndarray | None = None
    weight_matrix: np.ndarray | None = None
    # optional Z^r grading refining both degree and weight (a - e_j on W(n))
    multidegrees: np.ndarray | None = None

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.int64).reshape(len(self.labels), -1) % self.p

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def torus_rank(self) -> int:
        return self.weights.shape[1]

    def __repr__(self):
        return f"LieAlgebra({self.name!r}, dim={self.dim}, p={self.p})"

    # -- brackets ---------------------------------------------------------
    @cached_property
    def table(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR table over ordered pairs ``u*N + v`` (both orders filled)."""
        N = self.dim
        rows: list[list] = [[] for _ in range(N * N)]
        for (u, v), terms in self.brackets.items():
            for w, c in terms:
                rows[u * N + v].append((w, c % self.p))
                rows[v * N + u].append((w, (-c) % self.p))
        ptr = np.zeros(N * N + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(r) for r in rows])
        idx = np.array([w for r in rows for w, _ in r], dtype=np.int64)
        val = np.array([c for r in rows for _, c in r], dtype=np.int64)
        return ptr, idx, val

    def bracket_basis(self, u: int, v: int) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        ptr, idx, val = self.table
        k = u * self.dim + v
        out[idx[ptr[k]:ptr[k + 1]]] = val[ptr[k]:ptr[k + 1]]
        return out

    def bracket(self, a, b) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        ptr, idx, val = self.table
        N = self.dim
        a = np.asarray(a) % self.p
        b = np.asarray(b) % self.p
        nb = np.nonzero(b)[0]
        for u in np.nonzero(a)[0]:
            for v in nb:
                k = u * N + v
                s, e = ptr[k], ptr[k + 1]
                if s != e:
                    np.add.at(out, idx[s:e], val[s:e] * (a[u] * b[v] % self.p))
        return out % self.p

    @cached_property
    def structure_tensor(self) -> np.ndarray:
        """Dense ``C[u, v, w]``; only sensible for small algebras."""
        N = self.dim
        C = np.zeros((N, N, N), dtype=np.int64)
        ptr, idx, val = self.table
        for k in range(N * N):
            s, e = ptr[k], ptr[k + 1]
            if s != e:
                C[k // N, k % N, idx[s:e]] = val[s:e]
        return C

    def ad(self, x) -> np.ndarray:
        """Matrix of ad(x) acting on column vectors."""
        x = np.asarray(x) % self.p
        M = np.zeros((self.dim, self.dim), dtype=np.int64)
        for v in range(self.dim):
            M[:, v] = self.bracket(x, self.basis_vector(v))
        return M

    def basis_vector(self, u: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=np.int64)
        e[u] = 1
        return e

    # -- gradings ---------------------------------------------------------
    def graded_component(self, d: int) -> list[int]:
        return [int(u) for u in np.nonzero(self.degrees == d)[0]]

    def degree_range(self) -> tuple[int, int]:
        return int(self.degrees.min()), int(self.degrees.max())

    def weight_decomposition(self) -> dict[tuple, list[int]]:
        out: dict[tuple, list[int]] = {}
        for u in range(self.dim):
            out.setdefault(tuple(int(x) for x in self.weights[u]), []).append(u)
        return dict(sorted(out.items()))

    def zero_weight(self) -> tuple:
        return (0,) * self.torus_rank

    # -- checks -----------------------------------------------------------
    def check_grading(self):
        """Degree and weight additivity on every nonzero structure constant."""
        for (u, v), terms in self.brackets.items():
            for w, c in terms:
                if c % self.p == 0:
                    continue
                if self.degrees[w] != self.degrees[u] + self.degrees[v]:
                    raise StructureError(f"degree not additive on [{self.labels[u]}, {self.labels[v]}]")
                if np.any((self.weights[w] - self.weights[u] - self.weights[v]) % self.p):
                    raise StructureError(f"weight not additive on [{self.labels[u]}, {self.labels[v]}]")
                md = self.multidegrees
                if md is not None and np.any(md[w] != md[u] + md[v]):
                    raise StructureError(f"multidegree not additive on [{self.labels[u]}, {self.labels[v]}]")

    def check_torus(self):
        """Torus elements have degree 0, weight 0, commute, and act by their weights."""
        if not self.torus_inside:
            return
        if len(self.torus) != self.torus_rank:
            raise StructureError("torus size does not match the weight rank")
        for i, t in enumerate(self.torus):
            t = np.asarray(t) % self.p
            for u in np.nonzero(t)[0]:
                if self.degrees[u] != 0 or self.weights[u].any():
                    raise StructureError("torus element not of degree 0 and weight 0")
            for u in range(self.dim):
                got = self.bracket(t, self.basis_vector(u))
                want = self.weights[u, i] * self.basis_vector(u) % self.p
                if np.any(got != want):
                    raise StructureError(f"torus element {i} is not diagonal on {self.labels[u]}")
            for s in self.torus:
                if self.bracket(t, s).any():
                    raise StructureError("torus elements do not commute")

    def jacobi_defect(self, triples=None) -> list[tuple[int, int, int]]:
        """Basis triples violating Jacobi (all triples when ``triples`` is None)."""
        bad = []
        if triples is None:
            C = self.structure_tensor
            J = (np.einsum("uvw,wts->uvts", C, C) + np.einsum("vtw,wus->uvts", C, C)
                 + np.einsum("tuw,wvs->uvts", C, C)) % self.p
            for u, v, t in zip(*np.nonzero(J.any(axis=3))):
                bad.append((int(u), int(v), int(t)))
            return bad
        for u, v, t in triples:
            eu, ev, et = (self.basis_vector(i) for i in (u, v, t))
            j = (self.bracket(eu, self.bracket(ev, et)) + self.bracket(ev, self.bracket(et, eu))
                 + self.bracket(et, self.bracket(eu, ev))) % self.p
            if j.any():
                bad.append((u, v, t))
        return bad

    def antisymmetry_defect(self) -> list[tuple[int, int]]:
        bad = []
        for u in range(self.dim):
            if self.bracket_basis(u, u).any():
                bad.append((u, u))
            for v in range(u + 1, self.dim):
                if ((self.bracket_basis(u, v) + self.bracket_basis(v, u)) % self.p).any():
                    bad.append((u, v))
        return bad

    # -- serialization ----------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "schema": "modlie.algebra/1",
            "name": self.name,
            "p": self.p,
            "n": self.n,
            "labels": self.labels,
            "degrees": [int(d) for d in self.degrees],
            "weights": [[int(x) for x in w] for w in self.weights],
            "torus_inside": self.torus_inside,
            "torus": [[[int(u), int(t[u])] for u in np.nonzero(t)[0]] for t in self.torus],
            "brackets": [[u, v, [[int(w), int(c)] for w, c in terms]]
                         for (u, v), terms in sorted(self.brackets.items())],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "LieAlgebra":
        doc = json.loads(text)
        N = len(doc["labels"])
        torus = []
        for t in doc["torus"]:
            v = np.zeros(N, dtype=np.int64)
            for u, c in t:
                v[u] = c
            torus.append(v)
        return cls(name=doc["name"], p=doc["p"], labels=doc["labels"], degrees=doc["degrees"],
                   weights=doc["weights"],
                   brackets={(u, v): [tuple(x) for x in terms] for u, v, terms in doc["brackets"]},
                   torus=torus, torus_inside=doc["torus_inside"], n=doc["n"])


def from_basis_brackets(name, p, labels, degrees, weights, bracket_fn, **kw) -> LieAlgebra:
    """Assemble a :class:`LieAlgebra` from a function returning ``[e_u, e_v]``."""
    N = len(labels)
    br = {}
    for u in range(N):
        for v in range(u + 1, N):
            vec = np.asarray(bracket_fn(u, v)) % p
            nz = np.nonzero(vec)[0]
            if nz.size:
                br[(u, v)] = [(int(w), int(vec[w])) for w in nz]
    return LieAlgebra(name=name, p=p, labels=labels, degrees=degrees, weights=weights,
                      brackets=br, **kw)


# ---------------------------------------------------------------------------
# W(n)
# ---------------------------------------------------------------------------


def witt_label(a, j: int) -> str:
    return f"{mi.render(a)}D_{j}"


class WittAlgebra(LieAlgebra):
    """W(n) = Der A(n) with basis x^a D_j, ordered by (degree, a, j)."""

    poly: TruncatedPolyAlgebra
    pairs: list  # (a, j) per basis index
    index: dict

    def element(self, a, j: int) -> np.ndarray:
        return self.basis_vector(self.index[(tuple(a), j)])

    def D(self, j: int) -> np.ndarray:
        return self.element(mi.zero(self.n), j)

    def h(self, i: int) -> np.ndarray:
        return self.element(mi.eps(i, self.n), i)

    def from_coefficients(self, fs) -> np.ndarray:
        """The derivation sum_j f_j D_j from a list of A(n) vectors."""
        out = np.zeros(self.dim, dtype=np.int64)
        for j, f in enumerate(fs, start=1):
            for k in np.nonzero(f)[0]:
                out[self.index[(self.poly.basis[k], j)]] += f[k]
        return out % self.p

    def coefficients(self, E) -> list[np.ndarray]:
        """Inverse of :meth:`from_coefficients`."""
        fs = [np.zeros(self.poly.dim, dtype=np.int64) for _ in range(self.n)]
        for u in np.nonzero(np.asarray(E) % self.p)[0]:
            a, j = self.pairs[u]
            fs[j - 1][self.poly.index[a]] += E[u]
        return [f % self.p for f in fs]

    def apply(self, E, f) -> np.ndarray:
        """E(f) for E in W(n), f in A(n)."""
        out = np.zeros(self.poly.dim, dtype=np.int64)
        for j, c in enumerate(self.coefficients(E), start=1):
            if c.any():
                out += self.poly.mul(c, self.poly.partial(j, f))
        return out % self.p

    @cached_property
    def operator_matrices(self) -> np.ndarray:
        """``M[u]`` is the matrix of the basis derivation ``u`` on A(n)."""
        P = self.poly
        M = np.zeros((self.dim, P.dim, P.dim), dtype=np.int64)
        for u, (a, j) in enumerate(self.pairs):
            for k, b in enumerate(P.basis):
                if b[j - 1]:
                    c = mi.sub(mi.add(a, b), mi.eps(j, self.n))
                    if mi.fits(c, self.p):
                        M[u, P.index[c], k] = b[j - 1] % self.p
        return M

    def operator(self, E) -> np.ndarray:
        E = np.asarray(E) % self.p
        return np.tensordot(E, self.operator_matrices, axes=1) % self.p

    def render(self, E) -> str:
        terms = [f"{int(E[u])}*{self.labels[u]}" for u in np.nonzero(np.asarray(E) % self.p)[0]]
        return " + ".join(terms) if terms else "0"


def build_W(n: int, p: int) -> WittAlgebra:
    """The Witt-Jacobson algebra W(n) over F_p (dimension n p^n)."""
    P = TruncatedPolyAlgebra(n, p)
    pairs = [(a, j) for a in P.basis for j in range(1, n + 1)]
    pairs.sort(key=lambda t: (sum(t[0]) - 1, t[0], t[1]))
    index = {t: i for i, t in enumerate(pairs)}
    labels = [witt_label(a, j) for a, j in pairs]
    degrees = [sum(a) - 1 for a, _ in pairs]
    weights = [tuple((x - (1 if i == j - 1 else 0)) % p for i, x in enumerate(a)) for a, j in pairs]

    br = {}
    N = len(pairs)
    for u in range(N):
        a, i = pairs[u]
        for v in range(u + 1, N):
            b, j = pairs[v]
            # [x^a D_i, x^b D_j] = b_i x^{a+b-e_i} D_j - a_j x^{a+b-e_j} D_i
            terms: dict[int, int] = {}
            if b[i - 1]:
                c = mi.sub(mi.add(a, b), mi.eps(i, n))
                if mi.fits(c, p):
                    w = index[(c, j)]
                    terms[w] = (terms.get(w, 0) + b[i - 1]) % p
            if a[j - 1]:
                c = mi.sub(mi.add(a, b), mi.eps(j, n))
                if mi.fits(c, p):
                    w = index[(c, i)]
                    terms[w] = (terms.get(w, 0) - a[j - 1]) % p
            terms = {w: c for w, c in terms.items() if c}
            if terms:
                br[(u, v)] = sorted(terms.items())
    W = WittAlgebra(name="witt", p=p, labels=labels, degrees=degrees, weights=weights,
                    brackets=br, n=n)
    W.poly = P
    W.pairs = pairs
    W.index = index
    W.embedding = np.eye(N, dtype=np.int64)
    W.ambient = W
    W.torus = [W.h(i) for i in range(1, n + 1)]
    W.weight_matrix = np.eye(n, dtype=np.int64)
    W.ambient_weights = W.weights.copy()
    W.multidegrees = np.array([mi.sub(a, mi.eps(j, n)) for a, j in pairs], dtype=np.int64)
    W.check_grading()
    return W


def divergence(W: WittAlgebra, E) -> np.ndarray:
    """div(sum f_i D_i) = sum D_i(f_i), an element of A(n)."""
    out = np.zeros(W.poly.dim, dtype=np.int64)
    for i, f in enumerate(W.coefficients(E), start=1):
        out += W.poly.partial(i, f)
    return out % W.p


def D_ij(W: WittAlgebra, i: int, j: int, f) -> np.ndarray:
    """D_ij(f) = D_j(f) D_i - D_i(f) D_j."""
    P = W.poly
    fs = [np.zeros(P.dim, dtype=np.int64) for _ in range(W.n)]
    fs[i - 1] = fs[i - 1] + P.partial(j, f)
    fs[j - 1] = fs[j - 1] - P.partial(i, f)
    return W.from_coefficients(fs)


def p_power(W: WittAlgebra, E) -> np.ndarray:
    """E^[p]: the p-fold composite of E on A(n), which is again a derivation."""
    M = W.operator(E)
    Mp = np.eye(W.poly.dim, dtype=np.int64)
    for _ in range(W.p):
        Mp = Mp @ M % W.p
    fs = [Mp[:, W.poly.index[mi.eps(j, W.n)]] for j in range(1, W.n + 1)]
    out = W.from_coefficients(fs)
    if np.any(W.operator(out) != Mp):
        raise StructureError("p-th power of the operator is not a derivation")
    return out


# ---------------------------------------------------------------------------
# subspaces of W(n): S'(n), S(n), graded pieces
# ---------------------------------------------------------------------------


def _block_keys(W: WittAlgebra):
    keys: dict[tuple, list[int]] = {}
    for u in range(W.dim):
        keys.setdefault((int(W.degrees[u]), tuple(int(x) for x in W.weights[u])), []).append(u)
    return keys


def _echelon_in_blocks(W: WittAlgebra, vectors: list[np.ndarray]) -> np.ndarray:
    """Blockwise reduced echelon basis of span(vectors); vectors must be homogeneous."""
    blocks = _block_keys(W)
    where = {}
    for key, members in blocks.items():
        for u in members:
            where[u] = key
    grouped: dict[tuple, list[np.ndarray]] = {}
    for v in vectors:
        nz = np.nonzero(v % W.p)[0]
        if nz.size == 0:
            continue
        key = where[int(nz[0])]
        if any(where[int(u)] != key for u in nz):
            raise StructureError("vector is not homogeneous")
        grouped.setdefault(key, []).append(v % W.p)
    rows = []
    for key in sorted(grouped):
        members = blocks[key]
        A = np.array([v[members] for v in grouped[key]])
        R, piv = rref(A, W.p)
        for r in R:
            full = np.zeros(W.dim, dtype=np.int64)
            full[members] = r
            rows.append(full)
    rows.sort(key=lambda v: _order_key(W, v))
    return np.array(rows, dtype=np.int64).reshape(len(rows), W.dim)


def _order_key(W: WittAlgebra, v):
    lead = int(np.nonzero(v)[0][0])
    return (int(W.degrees[lead]), W.pairs[lead][0], W.pairs[lead][1])


def _pivot(v) -> int:
    return int(np.nonzero(v)[0][0])


def pair_brackets(W: WittAlgebra, A: np.ndarray, B: np.ndarray, us=None, vs=None):
    """Brackets ``[A[u], B[v]]`` in W(n) for the index pairs ``(us, vs)``.

    Defaults to all ``u < v`` with ``B = A``.  Returns ``(us, vs, out)`` where
    ``out`` is a sparse (pairs x dim W) CSR matrix with entries reduced mod p.
    """
    p = W.p
    M = W.dim
    A = np.asarray(A) % p
    B = np.asarray(B) % p
    if us is None:
        us, vs = np.triu_indices(len(A), k=1)

    def padded(R):
        K = max(int((R != 0).sum(axis=1).max()), 1) if len(R) else 1
        ridx = np.zeros((len(R), K), dtype=np.int64)
        rval = np.zeros((len(R), K), dtype=np.int64)
        for u in range(len(R)):
            nz = np.nonzero(R[u])[0]
            ridx[u, :nz.size] = nz
            rval[u, :nz.size] = R[u, nz]
        return ridx, rval

    ai, av = padded(A)
    bi, bv = padded(B)
    keys = (ai[us][:, :, None] * M + bi[vs][:, None, :]).reshape(len(us), -1)
    vals = (av[us][:, :, None] * bv[vs][:, None, :]).reshape(len(us), -1) % p
    rr = np.repeat(np.arange(len(us)), keys.shape[1])
    keep = vals.ravel() != 0
    kr = sparse.csr_matrix((vals.ravel()[keep], (rr[keep], keys.ravel()[keep])),
                           shape=(len(us), M * M))
    ptr, idx, val = W.table
    cmat = sparse.csr_matrix((val, idx, ptr), shape=(M * M, M))
    out = (kr @ cmat).tocsr()
    out.data %= p
    out.eliminate_zeros()
    return us, vs, out


def _subalgebra_of_W(W: WittAlgebra, rows: np.ndarray, name: str, torus_vectors=None,
                     weight_matrix=None) -> LieAlgebra:
    """Structure constants of the subalgebra spanned by echelon ``rows``."""
    p = W.p
    pivots = [_pivot(r) for r in rows]
    N = len(rows)
    R = sparse.csr_matrix(np.asarray(rows) % p)

    def coords(vec):
        c = vec[pivots] % p
        if np.any((c @ rows - vec) % p):
            raise StructureError(f"{name}: subspace is not closed under the bracket")
        return c

    us, vs, out = pair_brackets(W, rows, rows)
    co = out[:, pivots].tocsr()
    back = (co @ R - out).tocsr()
    back.data %= p
    if back.count_nonzero():
        raise StructureError(f"{name}: subspace is not closed under the bracket")
    br = {}
    for k in range(len(us)):
        s, e = co.indptr[k], co.indptr[k + 1]
        if s != e:
            terms = sorted((int(w), int(c) % p) for w, c in zip(co.indices[s:e], co.data[s:e]))
            terms = [(w, c) for w, c in terms if c]
            if terms:
                br[(int(us[k]), int(vs[k]))] = terms

    ambient_weights = np.array([W.weights[q] for q in pivots])
    for r in rows:
        nz = np.nonzero(np.asarray(r) % p)[0]
        if np.any(W.multidegrees[nz] != W.multidegrees[nz[0]]):
            raise StructureError(f"{name}: basis vector is not multihomogeneous")
    degrees = np.array([W.degrees[q] for q in pivots])
    labels = []
    for r in rows:
        nz = np.nonzero(r)[0]
        if len(nz) == 1 and r[nz[0]] == 1:
            labels.append(W.labels[nz[0]])
        else:
            labels.append(W.render(r).replace("1*", "").replace(" ", ""))
    L = np.eye(W.n, dtype=np.int64) if weight_matrix is None else np.asarray(weight_matrix)
    weights = (ambient_weights @ L.T % p).reshape(N, -1)
    g = LieAlgebra(name=name, p=p, labels=labels, degrees=degrees, weights=weights,
                   brackets=br, n=W.n)
    g.embedding = np.asarray(rows) % p
    g.ambient = W
    g.ambient_weights = ambient_weights
    g.weight_matrix = L
    g.multidegrees = W.multidegrees[pivots]
    if torus_vectors is None:
        g.torus, g.torus_inside = [], False
    else:
        g.torus = [coords(t) for t in torus_vectors]
    return g


def build_S(n: int, p: int) -> tuple[LieAlgebra, LieAlgebra]:
    """S'(n) (divergence-free derivations) and S(n) = [S'(n), S'(n)].

    Requires n >= 3, the standing hypothesis under which S(n) is treated.
    """
    if n < 3:
        raise ValueError(f"S(n) requires n >= 3 (got n = {n})")
    W = build_W(n, p)
    P = W.poly
    # kernel of div, block by block; div maps a block onto a single monomial
    ker = []
    for key, members in sorted(_block_keys(W).items()):
        A = np.array([divergence(W, W.basis_vector(u)) for u in members]).T % p
        A = A[np.any(A, axis=1)]
        if A.shape[0] == 0:
            basis = np.eye(len(members), dtype=np.int64)
        else:
            _, null = rank_nullspace(SparseMatrix.from_dense(A, p))
            basis = np.array(null, dtype=np.int64).reshape(-1, len(members))
        for b in basis:
            full = np.zeros(W.dim, dtype=np.int64)
            full[members] = b
            ker.append(full)
    sp_rows = _echelon_in_blocks(W, ker)

    # T_S-weights: eigenvalues of h_i - h_1, i = 2..n
    L = np.zeros((n - 1, n), dtype=np.int64)
    for i in range(1, n):
        L[i - 1, i] = 1
        L[i - 1, 0] = -1

    torus_W = [(W.h(i) - W.h(1)) % p for i in range(2, n + 1)]
    Sp = _subalgebra_of_W(W, sp_rows, "s_prime", torus_vectors=torus_W, weight_matrix=L)

    # derived algebra
    _, _, out = pair_brackets(W, sp_rows, sp_rows)
    derived = [row for row in out.toarray() if row.any()]
    s_rows = _echelon_in_blocks(W, derived)
    S = _subalgebra_of_W(W, s_rows, "special", torus_vectors=torus_W, weight_matrix=L)
    S.check_grading()
    Sp.check_grading()
    expected = (n - 1) * (p ** n - 1)
    if S.dim != expected:
        raise StructureError(f"dim S({n}) = {S.dim}, expected {expected}")
    if Sp.dim != S.dim + n:
        raise StructureError(f"dim S'({n}) - dim S({n}) = {Sp.dim - S.dim}, expected {n}")
    return Sp, S


def subalgebra(g: LieAlgebra, indices, name: str = "custom") -> LieAlgebra:
    """Basis-aligned subalgebra spanned by ``g``'s basis elements ``indices``.

    The torus of ``g`` is kept as a weight bookkeeping device; it counts as
    inside the subalgebra only when all torus elements are supported there.
    """
    idx = sorted(int(i) for i in indices)
    pos = {u: k for k, u in enumerate(idx)}

    def bracket_fn(a, b):
        vec = g.bracket_basis(idx[a], idx[b])
        out = np.zeros(len(idx), dtype=np.int64)
        for w in np.nonzero(vec)[0]:
            if int(w) not in pos:
                raise StructureError(f"{name}: [{g.labels[idx[a]]}, {g.labels[idx[b]]}] leaves the span")
            out[pos[int(w)]] = vec[w]
        return out

    inside = g.torus_inside and all(set(np.nonzero(t)[0]) <= set(idx) for t in g.torus)
    h = from_basis_brackets(name, g.p, [g.labels[u] for u in idx], g.degrees[idx],
                            g.weights[idx], bracket_fn, n=g.n)
    h.torus_inside = inside
    h.torus = [t[idx] for t in g.torus] if inside else []
    h.parent = g
    h.parent_indices = idx
    if g.embedding is not None:
        h.embedding = g.embedding[idx]
        h.ambient = g.ambient
        h.weight_matrix = g.weight_matrix
        h.ambient_weights = g.ambient_weights[idx]
    if g.multidegrees is not None:
        h.multidegrees = g.multidegrees[idx]
    return h


def degree_zero(g: LieAlgebra) -> LieAlgebra:
    """g_0: gl(n) inside W(n), sl(n) inside S(n)."""
    tag = {"witt": "gl", "special": "sl"}.get(g.name, "custom")
    return subalgebra(g, g.graded_component(0), name=tag)


def commutator_span(g: LieAlgebra, d: int) -> np.ndarray:
    """Echelon basis (rows, in g's coordinates) of [g_1, g_d]."""
    g1 = g.graded_component(1)
    gd = g.graded_component(d)
    vecs = [g.bracket_basis(u, v) for u in g1 for v in gd]
    vecs = [v for v in vecs if v.any()]
    if not vecs:
        return np.zeros((0, g.dim), dtype=np.int64)
    R, _ = rref(np.array(vecs), g.p)
    return R
