"""Finite-dimensional modules over the structure-constant Lie algebras."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from . import multiindex as mi
from .algebras import LieAlgebra, StructureError, WittAlgebra, pair_brackets
from .gf import rref


class ModuleError(ValueError):
    """Invalid module construction (non-closed subspace and the like)."""


@dataclass
class GModule:
    """A g-module with a basis of homogeneous weight vectors.

    ``action[(u, m)]`` lists ``(m2, c)`` with ``e_u . v_m = sum c v_m2``.
    Degrees are the raw module degrees; weights are in the coordinates of the
    algebra's torus.
    """

    algebra: LieAlgebra
    name: str
    labels: list[str]
    degrees: np.ndarray
    weights: np.ndarray
    action: dict
    multidegrees: np.ndarray | None = None

    def __post_init__(self):
        p = self.algebra.p
        self.degrees = np.asarray(self.degrees, dtype=np.int64).reshape(len(self.labels))
        self.weights = (np.asarray(self.weights, dtype=np.int64) % p).reshape(
            len(self.labels), self.algebra.torus_rank)
        self.action = {k: [(int(m), int(c) % p) for m, c in v if int(c) % p]
                       for k, v in self.action.items()}
        self.action = {k: v for k, v in self.action.items() if v}
        if self.multidegrees is not None:
            self.multidegrees = np.asarray(self.multidegrees, dtype=np.int64).reshape(self.dim, -1)

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def p(self) -> int:
        return self.algebra.p

    @property
    def is_trivial(self) -> bool:
        return not self.action

    def __repr__(self):
        return f"GModule({self.name!r}, dim={self.dim}, over {self.algebra.name})"

    # -- tables -----------------------------------------------------------
    def _csr(self, inverse: bool):
        D = self.dim
        rows: list[list] = [[] for _ in range(self.algebra.dim * D)]
        for (u, m), terms in sorted(self.action.items()):
            for m2, c in terms:
                if inverse:
                    rows[u * D + m2].append((m, c))
                else:
                    rows[u * D + m].append((m2, c))
        ptr = np.zeros(len(rows) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(r) for r in rows])
        idx = np.array([m for r in rows for m, _ in r], dtype=np.int64)
        val = np.array([c for r in rows for _, c in r], dtype=np.int64)
        return ptr, idx, val

    @cached_property
    def table(self):
        """CSR over ``u*dim + m``: the terms of ``e_u . v_m``."""
        return self._csr(False)

    @cached_property
    def inverse_table(self):
        """CSR over ``u*dim + m2``: pairs ``(m, c)`` with ``e_u . v_m`` containing ``c v_m2``."""
        return self._csr(True)

    def act_basis(self, u: int, m: int) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        for m2, c in self.action.get((u, m), ()):
            out[m2] = c
        return out

    def act(self, x, v) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.int64)
        v = np.asarray(v) % self.p
        x = np.asarray(x) % self.p
        nv = np.nonzero(v)[0]
        for u in np.nonzero(x)[0]:
            for m in nv:
                for m2, c in self.action.get((int(u), int(m)), ()):
                    out[m2] += x[u] * v[m] * c
        return out % self.p

    def matrix(self, u: int) -> np.ndarray:
        """Matrix of e_u acting on column vectors."""
        M = np.zeros((self.dim, self.dim), dtype=np.int64)
        for m in range(self.dim):
            for m2, c in self.action.get((u, m), ()):
                M[m2, m] = c
        return M

    def rho(self, x) -> np.ndarray:
        x = np.asarray(x) % self.p
        M = np.zeros((self.dim, self.dim), dtype=np.int64)
        for u in np.nonzero(x)[0]:
            M += x[u] * self.matrix(int(u))
        return M % self.p

    # -- checks -----------------------------------------------------------
    def check_grading(self):
        g = self.algebra
        for (u, m), terms in self.action.items():
            for m2, _ in terms:
                if self.degrees[m2] != g.degrees[u] + self.degrees[m]:
                    raise StructureError(f"{self.name}: degree not additive on {g.labels[u]} . {self.labels[m]}")
                if np.any((self.weights[m2] - g.weights[u] - self.weights[m]) % self.p):
                    raise StructureError(f"{self.name}: weight not additive on {g.labels[u]} . {self.labels[m]}")
                if self.multidegrees is not None and np.any(
                        self.multidegrees[m2] != g.multidegrees[u] + self.multidegrees[m]):
                    raise StructureError(f"{self.name}: multidegree not additive on {g.labels[u]} . {self.labels[m]}")

    def check_torus(self):
        g = self.algebra
        if not g.torus_inside:
            return
        for i, t in enumerate(g.torus):
            R = self.rho(t)
            if np.any(R != np.diag(self.weights[:, i] % self.p)):
                raise StructureError(f"{self.name}: torus element {i} does not act by the weights")

    def module_defect(self, pairs=None) -> list[tuple[int, int]]:
        """Pairs (u, v) for which rho([u, v]) != [rho(u), rho(v)]."""
        g = self.algebra
        mats = [self.matrix(u) for u in range(g.dim)]
        if pairs is None:
            pairs = [(u, v) for u in range(g.dim) for v in range(u + 1, g.dim)]
        bad = []
        for u, v in pairs:
            lhs = np.zeros((self.dim, self.dim), dtype=np.int64)
            b = g.bracket_basis(u, v)
            for w in np.nonzero(b)[0]:
                lhs += b[w] * mats[w]
            rhs = mats[u] @ mats[v] - mats[v] @ mats[u]
            if np.any((lhs - rhs) % self.p):
                bad.append((u, v))
        return bad

    # -- sub and quotient -------------------------------------------------
    def _closure_violation(self, keep: set):
        for (u, m), terms in self.action.items():
            if m in keep:
                for m2, _ in terms:
                    if m2 not in keep:
                        return u, m, m2
        return None

    def submodule(self, indices, name: str | None = None) -> "GModule":
        idx = sorted(int(i) for i in indices)
        keep = set(idx)
        bad = self._closure_violation(keep)
        if bad:
            u, m, m2 = bad
            raise ModuleError(f"span not closed: {self.algebra.labels[u]} . {self.labels[m]} "
                              f"has a component on {self.labels[m2]}")
        pos = {m: k for k, m in enumerate(idx)}
        act = {(u, pos[m]): [(pos[m2], c) for m2, c in terms]
               for (u, m), terms in self.action.items() if m in keep}
        return GModule(self.algebra, name or f"{self.name}_sub", [self.labels[m] for m in idx],
                       self.degrees[idx], self.weights[idx], act, self._md(idx))

    def _md(self, idx):
        return None if self.multidegrees is None else self.multidegrees[idx]

    def quotient(self, indices, name: str | None = None) -> "GModule":
        """Quotient by the submodule spanned by the basis vectors ``indices``."""
        drop = set(int(i) for i in indices)
        bad = self._closure_violation(drop)
        if bad:
            u, m, m2 = bad
            raise ModuleError(f"span not closed: {self.algebra.labels[u]} . {self.labels[m]} "
                              f"has a component on {self.labels[m2]}")
        idx = [m for m in range(self.dim) if m not in drop]
        pos = {m: k for k, m in enumerate(idx)}
        act = {}
        for (u, m), terms in self.action.items():
            if m in pos:
                t = [(pos[m2], c) for m2, c in terms if m2 in pos]
                if t:
                    act[(u, pos[m])] = t
        return GModule(self.algebra, name or f"{self.name}_quot", [self.labels[m] for m in idx],
                       self.degrees[idx], self.weights[idx], act, self._md(idx))

    # -- serialization ----------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "schema": "modlie.module/1",
            "name": self.name,
            "algebra": self.algebra.name,
            "p": self.p,
            "labels": self.labels,
            "degrees": [int(d) for d in self.degrees],
            "weights": [[int(x) for x in w] for w in self.weights],
            "multidegrees": None if self.multidegrees is None
            else [[int(x) for x in w] for w in self.multidegrees],
            "action": [[u, m, [[m2, c] for m2, c in terms]]
                       for (u, m), terms in sorted(self.action.items())],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _checked(M: GModule) -> GModule:
    M.check_grading()
    M.check_torus()
    return M


def adjoint_module(g: LieAlgebra) -> GModule:
    act = {}
    for (u, v), terms in g.brackets.items():
        act[(u, v)] = list(terms)
        act[(v, u)] = [(w, -c) for w, c in terms]
    return _checked(GModule(g, "adjoint", list(g.labels), g.degrees, g.weights, act,
                            g.multidegrees))


def trivial_module(g: LieAlgebra, dim: int = 1, degrees=None, weights=None,
                   labels=None) -> GModule:
    degrees = np.zeros(dim, dtype=np.int64) if degrees is None else degrees
    weights = np.zeros((dim, g.torus_rank), dtype=np.int64) if weights is None else weights
    labels = [f"1_{i}" for i in range(dim)] if labels is None else labels
    md = None
    if g.multidegrees is not None:
        md = np.zeros((dim, g.multidegrees.shape[1]), dtype=np.int64)
        if np.any(degrees) or np.any(weights):
            md = None
    return _checked(GModule(g, "trivial", labels, degrees, weights, {}, md))


def _require_embedded(g: LieAlgebra) -> WittAlgebra:
    if g.ambient is None or g.embedding is None:
        raise ModuleError(f"{g.name} is not given as a subalgebra of W(n)")
    return g.ambient


def natural_module(g: LieAlgebra) -> GModule:
    """A(n) with g acting by derivations: (x^a D_j) . x^b = b_j x^{a+b-e_j}."""
    W = _require_embedded(g)
    P = W.poly
    ops = np.tensordot(g.embedding % g.p, W.operator_matrices, axes=1) % g.p
    act = {}
    for u in range(g.dim):
        Mu = ops[u]
        for m in range(P.dim):
            col = np.nonzero(Mu[:, m])[0]
            if col.size:
                act[(u, m)] = [(int(k), int(Mu[k, m])) for k in col]
    amb = np.array(P.basis, dtype=np.int64)
    weights = amb @ np.asarray(g.weight_matrix).T % g.p
    labels = [mi.render(a) for a in P.basis]
    return _checked(GModule(g, "natural", labels, P.degrees, weights, act, amb))


def truncated_module(g: LieAlgebra) -> GModule:
    """A(n)_{<tau}: the span of all monomials other than x^tau."""
    A = natural_module(g)
    P = g.ambient.poly
    top = P.index[mi.tau(P.n, P.p)]
    try:
        sub = A.submodule([m for m in range(A.dim) if m != top], name="a_trunc")
    except ModuleError as exc:
        raise StructureError(f"A(n)_<tau is not closed under {g.name}: {exc}") from exc
    return _checked(sub)


def module_from_W_rows(g: LieAlgebra, rows: np.ndarray, name: str, labels=None) -> GModule:
    """The span of homogeneous ``rows`` of W(n), acted on by g through the W bracket."""
    W = _require_embedded(g)
    p = g.p
    B = np.asarray(rows, dtype=np.int64) % p
    m = len(B)
    aug = np.concatenate([B, np.eye(m, dtype=np.int64)], axis=1)
    R, piv = rref(aug, p)
    if len(piv) != m or piv[-1] >= W.dim:
        raise ModuleError(f"{name}: rows are linearly dependent")
    E = R[:, W.dim:]
    us = np.repeat(np.arange(g.dim), m)
    vs = np.tile(np.arange(m), g.dim)
    _, _, out = pair_brackets(W, g.embedding, B, us, vs)
    coords = (out[:, piv] @ sparse.csr_matrix(E)).tocsr()
    coords.data %= p
    coords.eliminate_zeros()
    back = (coords @ sparse.csr_matrix(B) - out).tocsr()
    back.data %= p
    if back.count_nonzero():
        k = int(np.nonzero(np.asarray(abs(back).sum(axis=1)).ravel())[0][0])
        raise ModuleError(f"{name}: span not closed under {g.labels[us[k]]}")
    act = {}
    for k in range(len(us)):
        s, e = coords.indptr[k], coords.indptr[k + 1]
        if s != e:
            act[(int(us[k]), int(vs[k]))] = sorted(
                (int(w), int(c)) for w, c in zip(coords.indices[s:e], coords.data[s:e]))
    pivots = [int(np.nonzero(r)[0][0]) for r in B]
    degrees = W.degrees[pivots]
    weights = W.weights[pivots] @ np.asarray(g.weight_matrix).T % p
    if labels is None:
        labels = []
        for r in B:
            nz = np.nonzero(r)[0]
            labels.append(W.labels[nz[0]] if len(nz) == 1 and r[nz[0]] == 1
                          else W.render(r).replace(" ", ""))
    md = W.multidegrees[pivots]
    for r in B:
        nz = np.nonzero(r)[0]
        if np.any(W.multidegrees[nz] != W.multidegrees[nz[0]]):
            md = None
            break
    return _checked(GModule(g, name, labels, degrees, weights, act, md))


def restriction_module(g: LieAlgebra) -> GModule:
    """W(n) as a module over its subalgebra g (action = bracket in W(n))."""
    W = _require_embedded(g)
    return module_from_W_rows(g, np.eye(W.dim, dtype=np.int64), "w_restricted", list(W.labels))


def sprime_module(S: LieAlgebra) -> GModule:
    """S'(n) as an S(n)-module, on the basis S(n) followed by x^{tau-(p-1)e_i} D_i."""
    W = _require_embedded(S)
    n, p = W.n, W.p
    extra = []
    for i in range(1, n + 1):
        a = tuple(p - 1 if k != i - 1 else 0 for k in range(n))
        extra.append(W.element(a, i))
    rows = np.concatenate([S.embedding, np.array(extra)], axis=0)
    return module_from_W_rows(S, rows, "s_prime")


def sprime_quotient_module(S: LieAlgebra) -> GModule:
    """S'(n)/S(n) as an S(n)-module."""
    Sp = sprime_module(S)
    return _checked(Sp.quotient(range(S.dim), name="s_prime_mod_s"))
