"""Chevalley-Eilenberg cochains and cohomology, computed block by block.

A k-cochain with values in a module M is stored on strictly increasing
k-tuples of algebra basis indices.  Every cochain basis element
``(sigma, m)`` carries the key ``key(m) - sum key(sigma_i)``, where the key is
the multidegree when both algebra and module have one and otherwise the pair
(weight, degree).  The differential preserves keys, so the complex splits
into independent blocks.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import os
import time
from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
from numba import njit
from scipy import sparse

from .algebras import LieAlgebra, StructureError
from .gf import Echelon, TwoPhaseEchelon, check_prime, inverse_table
from .modules import GModule

SCHEMA = "modlie.cohomology_report/1"
COCHAIN_SCHEMA = "modlie.cochain/1"
DEFAULT_DIM_GUARD = 2_000_000
CHUNK = 20_000


class GuardError(RuntimeError):
    """Refusal to assemble an unblocked system above the size budget."""

    def __init__(self, message: str, stats: dict):
        super().__init__(message)
        self.stats = stats


class CocycleError(ValueError):
    """A cochain expected to be a cocycle is not."""


# ---------------------------------------------------------------------------
# cochains
# ---------------------------------------------------------------------------


def _sort_sign(tup) -> tuple[int, tuple]:
    """Sign of the permutation sorting ``tup`` (0 on a repeated index)."""
    tup = list(tup)
    if len(set(tup)) != len(tup):
        return 0, tuple(sorted(tup))
    sign = 1
    for i in range(len(tup)):
        for j in range(i + 1, len(tup)):
            if tup[i] > tup[j]:
                sign = -sign
    return sign, tuple(sorted(tup))


@dataclass
class Cochain:
    """Sparse alternating k-cochain ``entries[(sigma, m)] = c`` with sigma increasing."""

    algebra: LieAlgebra
    module: GModule
    k: int
    entries: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        p = self.algebra.p
        clean = {}
        for (sig, m), c in self.entries.items():
            s, srt = _sort_sign(sig)
            if len(srt) != self.k:
                raise ValueError(f"cochain entry {sig} does not have arity {self.k}")
            c = s * int(c) % p
            if c:
                key = (srt, int(m))
                clean[key] = (clean.get(key, 0) + c) % p
        self.entries = {k: v for k, v in sorted(clean.items()) if v}

    @property
    def p(self) -> int:
        return self.algebra.p

    def value(self, args) -> np.ndarray:
        """f(args) as a module vector, antisymmetrizing over the argument order."""
        out = np.zeros(self.module.dim, dtype=np.int64)
        s, srt = _sort_sign(args)
        if s == 0:
            return out
        for m in range(self.module.dim):
            c = self.entries.get((srt, m))
            if c:
                out[m] = s * c
        return out % self.p

    def evaluate(self, vectors) -> np.ndarray:
        """f(v_1, ..., v_k) for algebra vectors (multilinear extension)."""
        vecs = [np.asarray(v) % self.p for v in vectors]
        out = np.zeros(self.module.dim, dtype=np.int64)
        for (sig, m), c in self.entries.items():
            # sum over permutations placing sig's entries on the k slots
            for perm in itertools.permutations(range(self.k)):
                coef = c
                for slot, pos in enumerate(perm):
                    coef = coef * vecs[slot][sig[pos]] % self.p
                    if not coef:
                        break
                if coef:
                    s, _ = _sort_sign(perm)
                    out[m] += s * coef
        return out % self.p

    def is_zero(self) -> bool:
        return not self.entries

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        ent = dict(self.entries)
        for key, c in other.entries.items():
            ent[key] = (ent.get(key, 0) + c) % self.p
        return Cochain(self.algebra, self.module, self.k, ent)

    def scale(self, c: int) -> "Cochain":
        return Cochain(self.algebra, self.module, self.k,
                       {key: v * c for key, v in self.entries.items()}, self.name)

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + other.scale(-1)

    def __eq__(self, other):
        return (isinstance(other, Cochain) and self.k == other.k
                and self.algebra is other.algebra and self.entries == other.entries)

    def _check_compatible(self, other):
        if other.algebra is not self.algebra or other.module is not self.module or other.k != self.k:
            raise ValueError("cochains live in different spaces")

    def keys(self, space: "CochainSpace") -> set:
        return {space.entry_key(sig, m) for sig, m in self.entries}

    def to_json(self) -> str:
        doc = {
            "schema": COCHAIN_SCHEMA,
            "name": self.name,
            "k": self.k,
            "algebra": self.algebra.name,
            "module": self.module.name,
            "p": self.p,
            "entries": [[list(sig), m, c] for (sig, m), c in sorted(self.entries.items())],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def to_doc(self) -> dict:
        return json.loads(self.to_json())

    @classmethod
    def from_json(cls, text: str, algebra: LieAlgebra, module: GModule) -> "Cochain":
        doc = json.loads(text)
        ent = {(tuple(sig), m): c for sig, m, c in doc["entries"]}
        return cls(algebra, module, doc["k"], ent, doc.get("name", ""))


def zero_cochain(g: LieAlgebra, M: GModule, k: int) -> Cochain:
    return Cochain(g, M, k, {})


def module_element_cochain(g: LieAlgebra, M: GModule, v) -> Cochain:
    v = np.asarray(v) % g.p
    return Cochain(g, M, 0, {((), int(m)): int(v[m]) for m in np.nonzero(v)[0]})


def _check_pair(g: LieAlgebra, M: GModule):
    if M.algebra is not g:
        raise ValueError(f"module {M.name} is not a module over {g.name}")


# ---------------------------------------------------------------------------
# differential by pushing each entry forward
# ---------------------------------------------------------------------------


@njit(cache=True)
def _push_chunk(sig, ms, cs, k, N, D, p, fptr, fidx, fval, rptr, ru, rv, rc):
    """Push cochain entries through the differential.

    Emits unsorted ``(tuple code, module index, value)`` triples whose sum
    is d(f) restricted to the given entries.
    """
    cap = 1024
    oc = np.empty(cap, dtype=np.int64)
    om = np.empty(cap, dtype=np.int64)
    ov = np.empty(cap, dtype=np.int64)
    n = 0
    tau = np.empty(k + 1, dtype=np.int64)
    for e in range(sig.shape[0]):
        c = cs[e]
        m = ms[e]
        # sigma_i . f(..hat sigma_i..): u inserted at position i with sign (-1)^i
        for u in range(N):
            pos = 0
            clash = False
            for j in range(k):
                if sig[e, j] == u:
                    clash = True
                    break
                if sig[e, j] < u:
                    pos += 1
            if clash:
                continue
            s = fptr[u * D + m]
            t = fptr[u * D + m + 1]
            if s == t:
                continue
            code = 0
            q = 0
            for j in range(k + 1):
                if j == pos:
                    x = u
                else:
                    x = sig[e, q]
                    q += 1
                code = code * N + x
            sgn = 1 if pos % 2 == 0 else p - 1
            for a in range(s, t):
                if n >= cap:
                    cap *= 2
                    oc2 = np.empty(cap, dtype=np.int64)
                    om2 = np.empty(cap, dtype=np.int64)
                    ov2 = np.empty(cap, dtype=np.int64)
                    oc2[:n] = oc[:n]
                    om2[:n] = om[:n]
                    ov2[:n] = ov[:n]
                    oc, om, ov = oc2, om2, ov2
                oc[n] = code
                om[n] = fidx[a]
                ov[n] = sgn * c % p * fval[a] % p
                n += 1
        # f([u, v], rest): the entry's j-th index plays the role of [u, v]
        for j in range(k):
            w = sig[e, j]
            # moving w to the front of sigma costs (-1)^j
            for a in range(rptr[w], rptr[w + 1]):
                u = ru[a]
                v = rv[a]
                clash = False
                for q in range(k):
                    if q != j and (sig[e, q] == u or sig[e, q] == v):
                        clash = True
                        break
                if clash:
                    continue
                # tau = rest + {u, v} sorted, with u, v at positions pu < pv
                q = 0
                for t_ in range(k):
                    if t_ != j:
                        tau[q] = sig[e, t_]
                        q += 1
                tau[k - 1] = u
                tau[k] = v
                for x in range(1, k + 1):
                    y = x
                    while y > 0 and tau[y - 1] > tau[y]:
                        tmp = tau[y - 1]
                        tau[y - 1] = tau[y]
                        tau[y] = tmp
                        y -= 1
                pu = 0
                pv = 0
                code = 0
                for t_ in range(k + 1):
                    if tau[t_] == u:
                        pu = t_
                    elif tau[t_] == v:
                        pv = t_
                    code = code * N + tau[t_]
                val = rc[a] * c % p
                if (pu + pv + j) % 2 == 1:
                    val = (p - val) % p
                if n >= cap:
                    cap *= 2
                    oc2 = np.empty(cap, dtype=np.int64)
                    om2 = np.empty(cap, dtype=np.int64)
                    ov2 = np.empty(cap, dtype=np.int64)
                    oc2[:n] = oc[:n]
                    om2[:n] = om[:n]
                    ov2[:n] = ov[:n]
                    oc, om, ov = oc2, om2, ov2
                oc[n] = code
                om[n] = m
                ov[n] = val
                n += 1
    return oc[:n], om[:n], ov[:n]


def _decode(code: int, k: int, N: int) -> tuple:
    out = []
    for _ in range(k):
        out.append(code % N)
        code //= N
    return tuple(reversed(out))


def _encode_rows(tuples: np.ndarray, N: int) -> np.ndarray:
    code = np.zeros(len(tuples), dtype=np.int64)
    for j in range(tuples.shape[1]):
        code = code * N + tuples[:, j]
    return code


class _Tables:
    """Lookup tables shared by the differential kernels for a pair (g, M)."""

    def __init__(self, g: LieAlgebra, M: GModule):
        _check_pair(g, M)
        self.g, self.M = g, M
        self.N, self.D, self.p = g.dim, M.dim, g.p
        self.bptr, self.bidx, self.bval = g.table
        self.fptr, self.fidx, self.fval = M.table
        self.iptr, self.iidx, self.ival = M.inverse_table

    @cached_property
    def reverse_brackets(self):
        """For each w, the pairs (u < v) with a w-component c in [e_u, e_v]."""
        N = self.N
        lists: list[list] = [[] for _ in range(N)]
        for (u, v), terms in sorted(self.g.brackets.items()):
            for w, c in terms:
                lists[w].append((u, v, c % self.p))
        ptr = np.zeros(N + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(x) for x in lists])
        flat = [t for x in lists for t in x]
        arr = np.array(flat, dtype=np.int64).reshape(-1, 3)
        return ptr, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy()


_TABLE_CACHE: dict = {}


def _tables(g: LieAlgebra, M: GModule) -> _Tables:
    key = (id(g), id(M))
    hit = _TABLE_CACHE.get(key)
    if hit is None or hit.g is not g or hit.M is not M:
        hit = _Tables(g, M)
        _TABLE_CACHE[key] = hit
    return hit


def differential(f: Cochain) -> Cochain:
    """d f by the Chevalley-Eilenberg formula, computed by pushing entries forward."""
    g, M, k = f.algebra, f.module, f.k
    _check_pair(g, M)
    T = _tables(g, M)
    if not f.entries:
        return Cochain(g, M, k + 1, {})
    rptr, ru, rv, rc = T.reverse_brackets
    items = list(f.entries.items())
    acc: dict = {}
    for s in range(0, len(items), CHUNK):
        part = items[s:s + CHUNK]
        sig = np.array([t for (t, _), _ in part], dtype=np.int64).reshape(len(part), k)
        ms = np.array([m for (_, m), _ in part], dtype=np.int64)
        cs = np.array([c for _, c in part], dtype=np.int64)
        oc, om, ov = _push_chunk(sig, ms, cs, k, T.N, T.D, T.p, T.fptr, T.fidx, T.fval,
                                 rptr, ru, rv, rc)
        if oc.size == 0:
            continue
        key = oc * T.D + om
        uk, inv = np.unique(key, return_inverse=True)
        sums = np.zeros(uk.size, dtype=np.int64)
        np.add.at(sums, inv, ov)
        for kk, v in zip(uk.tolist(), (sums % T.p).tolist()):
            if v:
                acc[kk] = (acc.get(kk, 0) + v) % T.p
    ent = {}
    for kk, v in acc.items():
        if v:
            ent[(_decode(kk // T.D, k + 1, T.N), kk % T.D)] = v
    return Cochain(g, M, k + 1, ent)


def is_cocycle(f: Cochain) -> bool:
    return differential(f).is_zero()


def cochain_action(gamma, f: Cochain) -> Cochain:
    """(gamma . f)(s_1..s_k) = gamma . f(s) - sum_i f(s_1, .., [gamma, s_i], .., s_k)."""
    g, M, k = f.algebra, f.module, f.k
    p = g.p
    gamma = np.asarray(gamma) % p
    ent: dict = {}

    def put(key, c):
        ent[key] = (ent.get(key, 0) + c) % p

    for (sig, m), c in f.entries.items():
        for u in np.nonzero(gamma)[0]:
            for m2, a in M.action.get((int(u), m), ()):
                put((sig, m2), int(gamma[u]) * a * c)
    # - f(.., [gamma, s_i], ..): pull back through ad(gamma)
    ad = g.ad(gamma)
    for (sig, m), c in f.entries.items():
        for i, w in enumerate(sig):
            # columns s with [gamma, s] having a w-component
            for s in np.nonzero(ad[w])[0]:
                new = list(sig)
                new[i] = int(s)
                sgn, srt = _sort_sign(new)
                if sgn:
                    put((srt, m), -sgn * int(ad[w, s]) * c)
    return Cochain(g, M, k, ent)


def contraction(f: Cochain, gamma) -> Cochain:
    """f_gamma(s_1..s_{k-1}) = f(gamma, s_1, .., s_{k-1})."""
    g, M, k = f.algebra, f.module, f.k
    if k == 0:
        raise ValueError("cannot contract a 0-cochain")
    p = g.p
    gamma = np.asarray(gamma) % p
    ent: dict = {}
    for (sig, m), c in f.entries.items():
        for i, u in enumerate(sig):
            if gamma[u]:
                rest = sig[:i] + sig[i + 1:]
                key = (rest, m)
                ent[key] = (ent.get(key, 0) + (-1) ** i * int(gamma[u]) * c) % p
    return Cochain(g, M, k - 1, ent)


# ---------------------------------------------------------------------------
# cochain spaces and blocks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockKey:
    weight: tuple
    degree: int
    multidegree: tuple | None = None

    def sort_key(self):
        return (self.degree, self.weight, self.multidegree or ())

    def label(self) -> str:
        w = ",".join(str(x) for x in self.weight)
        s = f"w=({w}) d={self.degree}"
        if self.multidegree is not None:
            s += " md=(" + ",".join(str(x) for x in self.multidegree) + ")"
        return s


class CochainSpace:
    """Enumerates cochain bases of (g, M) grouped by block key."""

    def __init__(self, g: LieAlgebra, M: GModule):
        _check_pair(g, M)
        self.g, self.M = g, M
        self.N, self.D, self.p = g.dim, M.dim, g.p
        if g.multidegrees is not None and M.multidegrees is not None \
                and g.multidegrees.shape[1] == M.multidegrees.shape[1]:
            self.alg_keys = np.asarray(g.multidegrees, dtype=np.int64)
            self.mod_keys = np.asarray(M.multidegrees, dtype=np.int64)
            self.modular = np.zeros(self.alg_keys.shape[1], dtype=bool)
            self.uses_multidegree = True
        else:
            self.alg_keys = np.hstack([g.weights, g.degrees[:, None]]).astype(np.int64)
            self.mod_keys = np.hstack([M.weights, M.degrees[:, None]]).astype(np.int64)
            self.modular = np.array([True] * g.torus_rank + [False])
            self.uses_multidegree = False
        self._groups: dict = {}
        self._pairs: dict = {}

    def _norm(self, keys: np.ndarray) -> np.ndarray:
        keys = keys.copy()
        keys[..., self.modular] %= self.p
        return keys

    @cached_property
    def _module_groups(self):
        uk, inv = np.unique(self._norm(self.mod_keys), axis=0, return_inverse=True)
        members = [np.nonzero(inv.ravel() == i)[0] for i in range(len(uk))]
        return uk, members

    def tuples(self, k: int) -> np.ndarray:
        if k == 0:
            return np.zeros((1, 0), dtype=np.int64)
        if k > self.N:
            return np.zeros((0, k), dtype=np.int64)
        if self.N ** k * max(self.D, 1) >= 2 ** 62:
            raise OverflowError("cochain index space too large to encode")
        flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(self.N), k)),
                           dtype=np.int64, count=comb(self.N, k) * k)
        return flat.reshape(-1, k)

    def groups(self, k: int):
        """Tuple groups of arity k: (tuples, codes, unique keys, member lists)."""
        if k in self._groups:
            return self._groups[k]
        tup = self.tuples(k)
        if k == 0:
            sums = np.zeros((1, self.alg_keys.shape[1]), dtype=np.int64)
        else:
            sums = self._norm(self.alg_keys[tup].sum(axis=1))
        uk, inv = np.unique(sums, axis=0, return_inverse=True)
        inv = inv.ravel()
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(len(uk) + 1))
        members = [order[bounds[i]:bounds[i + 1]] for i in range(len(uk))]
        res = (tup, _encode_rows(tup, self.N), uk, members)
        self._groups[k] = res
        return res

    def entry_key(self, sig, m) -> tuple:
        key = self.mod_keys[m] - self.alg_keys[list(sig)].sum(axis=0) if sig else self.mod_keys[m].copy()
        return tuple(int(x) for x in self._norm(key))

    def _key_info(self, key: tuple, sig, m) -> BlockKey:
        g, M = self.g, self.M
        w = (M.weights[m] - g.weights[list(sig)].sum(axis=0)) % self.p if sig else M.weights[m] % self.p
        d = int(M.degrees[m] - g.degrees[list(sig)].sum()) if sig else int(M.degrees[m])
        return BlockKey(tuple(int(x) for x in w), d, key if self.uses_multidegree else None)

    def block_pairs(self, k: int) -> dict:
        """key -> list of (tuple group, module group) pairs making up that block of C^k."""
        if k in self._pairs:
            return self._pairs[k]
        _, _, uk, members = self.groups(k)
        mk, mmembers = self._module_groups
        out: dict = {}
        for j in range(len(mk)):
            diff = self._norm(mk[j][None, :] - uk)
            for i, key in enumerate(map(tuple, diff.tolist())):
                out.setdefault(key, []).append((i, j))
        self._pairs[k] = out
        return out

    def blocks(self, k: int) -> list[tuple[tuple, BlockKey, int]]:
        """Nonempty blocks of C^k as (key, BlockKey, dimension), in canonical order."""
        tup, _, _, members = self.groups(k)
        _, mmembers = self._module_groups
        res = []
        for key, pairs in self.block_pairs(k).items():
            size = sum(len(members[i]) * len(mmembers[j]) for i, j in pairs)
            if size == 0:
                continue
            i, j = pairs[0]
            info = self._key_info(key, tuple(tup[members[i][0]]), int(mmembers[j][0]))
            res.append((key, info, size))
        res.sort(key=lambda t: t[1].sort_key())
        return res

    def block_entries(self, k: int, keys) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (tuple index, module index) pairs of C^k in the union of ``keys``."""
        tup, codes, _, members = self.groups(k)
        _, mmembers = self._module_groups
        bp = self.block_pairs(k)
        ti, mi_ = [], []
        for key in keys:
            for i, j in bp.get(key, ()):
                t = members[i]
                m = mmembers[j]
                ti.append(np.repeat(t, len(m)))
                mi_.append(np.tile(m, len(t)))
        if not ti:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        ti = np.concatenate(ti)
        mi_ = np.concatenate(mi_)
        full = codes[ti] * self.D + mi_
        order = np.argsort(full, kind="stable")
        return ti[order], mi_[order]

    def block_codes(self, k: int, keys) -> np.ndarray:
        ti, mi_ = self.block_entries(k, keys)
        _, codes, _, _ = self.groups(k)
        return codes[ti] * self.D + mi_


@njit(cache=True)
def _gen_rows(tup, ti, mi_, k1, N, D, p, bptr, bidx, bval, iptr, iidx, ival, colcodes,
              scratch):
    """CSR rows of the differential C^k -> C^{k+1} for C^{k+1} entries (tup[ti], mi_).

    Returns ``(indptr, indices, data, ok)``; ``ok`` is False when a term falls
    outside ``colcodes`` (which would mean the block is not closed).
    """
    nrows = ti.shape[0]
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    indices = np.empty(nrows * scratch, dtype=np.int64)
    data = np.empty(nrows * scratch, dtype=np.int64)
    sc = np.empty(scratch, dtype=np.int64)
    sv = np.empty(scratch, dtype=np.int64)
    nnz = 0
    ok = True
    ncol = colcodes.shape[0]
    cd = 0
    for r in range(nrows):
        t = tup[ti[r]]
        m2 = mi_[r]
        cnt = 0
        for i in range(k1):
            u = t[i]
            code = 0
            for j in range(k1):
                if j != i:
                    code = code * N + t[j]
            sgn = 1 if i % 2 == 0 else p - 1
            for e in range(iptr[u * D + m2], iptr[u * D + m2 + 1]):
                sc[cnt] = code * D + iidx[e]
                sv[cnt] = sgn * ival[e] % p
                cnt += 1
        for a in range(k1):
            for b in range(a + 1, k1):
                u = t[a]
                v = t[b]
                sgn0 = 1 if (a + b) % 2 == 0 else p - 1
                for e in range(bptr[u * N + v], bptr[u * N + v + 1]):
                    w = bidx[e]
                    pos = 0
                    clash = False
                    for j in range(k1):
                        if j == a or j == b:
                            continue
                        if t[j] == w:
                            clash = True
                            break
                        if t[j] < w:
                            pos += 1
                    if clash:
                        continue
                    code = 0
                    q = 0
                    done = False
                    for j in range(k1):
                        if j == a or j == b:
                            continue
                        if not done and q == pos:
                            code = code * N + w
                            done = True
                        code = code * N + t[j]
                        q += 1
                    if not done:
                        code = code * N + w
                    s = sgn0 if pos % 2 == 0 else (p - sgn0) % p
                    sc[cnt] = code * D + m2
                    sv[cnt] = s * bval[e] % p
                    cnt += 1
        if cnt > 0:
            order = np.argsort(sc[:cnt])
            last = -1
            acc = 0
            for z in range(cnt + 1):
                if z < cnt:
                    cd = sc[order[z]]
                    if cd == last:
                        acc = (acc + sv[order[z]]) % p
                        continue
                if last >= 0 and acc != 0:
                    pos = np.searchsorted(colcodes, last)
                    if pos >= ncol or colcodes[pos] != last:
                        ok = False
                    else:
                        indices[nnz] = pos
                        data[nnz] = acc
                        nnz += 1
                if z < cnt:
                    last = cd
                    acc = sv[order[z]]
        indptr[r + 1] = nnz
    return indptr, indices[:nnz], data[:nnz], ok


class BlockSystem:
    """The differential C^k -> C^{k+1} restricted to a union of blocks."""

    def __init__(self, space: CochainSpace, k: int, keys):
        self.space, self.k, self.keys = space, k, list(keys)
        self.T = _tables(space.g, space.M)
        self.col_ti, self.col_mi = space.block_entries(k, self.keys)
        _, codes, _, _ = space.groups(k)
        self.colcodes = codes[self.col_ti] * space.D + self.col_mi
        self.row_ti, self.row_mi = space.block_entries(k + 1, self.keys)
        T = self.T
        maxinv = int(np.diff(T.iptr).max()) if T.iptr.size > 1 else 0
        maxbr = int(np.diff(T.bptr).max()) if T.bptr.size > 1 else 0
        self.scratch = max(1, (k + 1) * maxinv + comb(k + 1, 2) * maxbr)

    @property
    def ncols(self) -> int:
        return len(self.colcodes)

    @property
    def nrows(self) -> int:
        return len(self.row_ti)

    def rows(self, start: int, stop: int):
        s = self.space
        tup = s.groups(self.k + 1)[0]
        T = self.T
        indptr, indices, data, ok = _gen_rows(
            tup, self.row_ti[start:stop], self.row_mi[start:stop], self.k + 1, s.N, s.D, s.p,
            T.bptr, T.bidx, T.bval, T.iptr, T.iidx, T.ival, self.colcodes, self.scratch)
        if not ok:
            raise StructureError("differential leaves its block: inconsistent grading")
        return indptr, indices, data

    def matrix(self) -> sparse.csr_matrix:
        indptr, indices, data = self.rows(0, self.nrows)
        return sparse.csr_matrix((data, indices, indptr), shape=(self.nrows, self.ncols))

    def vector(self, f: Cochain) -> np.ndarray:
        """Coordinates of f's components in this system's column space."""
        vec = np.zeros(self.ncols, dtype=np.int64)
        D, N = self.space.D, self.space.N
        for (sig, m), c in f.entries.items():
            code = 0
            for x in sig:
                code = code * N + x
            code = code * D + m
            pos = np.searchsorted(self.colcodes, code)
            if pos < self.ncols and self.colcodes[pos] == code:
                vec[pos] = c
        return vec

    def cochain(self, vec, name: str = "") -> Cochain:
        s = self.space
        tup = s.groups(self.k)[0]
        vec = np.asarray(vec) % s.p
        ent = {(tuple(int(x) for x in tup[self.col_ti[i]]), int(self.col_mi[i])): int(vec[i])
               for i in np.nonzero(vec)[0]}
        return Cochain(s.g, s.M, self.k, ent, name)


def _transpose_csr(indptr, indices, data, nrows, ncols):
    A = sparse.csr_matrix((data, indices, indptr), shape=(nrows, ncols)).T.tocsr()
    A.sort_indices()
    return A.indptr.astype(np.int64), A.indices.astype(np.int64), A.data.astype(np.int64)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class BlockAudit:
    key: BlockKey
    dim_c: int
    dim_z: int
    dim_b: int
    dim_h: int
    rank_d: int
    rows_total: int
    rows_used: int
    early_stop: bool
    hints_used: int = 0
    elapsed: float = 0.0

    def to_doc(self, timings: bool) -> dict:
        doc = {
            "weight": list(self.key.weight),
            "degree": self.key.degree,
            "multidegree": None if self.key.multidegree is None else list(self.key.multidegree),
            "dim_C": self.dim_c, "dim_Z": self.dim_z, "dim_B": self.dim_b, "dim_H": self.dim_h,
            "rank_d": self.rank_d, "rows_total": self.rows_total, "rows_used": self.rows_used,
            "early_stop": self.early_stop, "hints_used": self.hints_used,
        }
        if timings:
            doc["elapsed_s"] = round(self.elapsed, 3)
        return doc


@dataclass
class CohomologyReport:
    algebra: str
    module: str
    n: int
    p: int
    k: int
    options: dict
    blocks: list
    representatives: list
    relative_to: list | None = None

    @property
    def dim_C(self) -> int:
        return sum(b.dim_c for b in self.blocks)

    @property
    def dim_Z(self) -> int:
        return sum(b.dim_z for b in self.blocks)

    @property
    def dim_B(self) -> int:
        return sum(b.dim_b for b in self.blocks)

    @property
    def dim_H(self) -> int:
        return sum(b.dim_h for b in self.blocks)

    def nonzero_blocks(self) -> list:
        return [b for b in self.blocks if b.dim_h]

    def to_doc(self, timings: bool = False) -> dict:
        doc = {
            "schema": SCHEMA,
            "algebra": self.algebra, "module": self.module, "n": self.n, "p": self.p, "k": self.k,
            "options": self.options,
            "dim_C": self.dim_C, "dim_Z": self.dim_Z, "dim_B": self.dim_B, "dim_H": self.dim_H,
            "blocks": [b.to_doc(timings) for b in self.blocks],
            "representatives": [r.to_doc() for r in self.representatives],
        }
        if self.relative_to is not None:
            doc["relative_to"] = self.relative_to
        return doc

    def to_json(self, timings: bool = False) -> str:
        return json.dumps(self.to_doc(timings), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["weight", "degree", "multidegree", "dim_C", "dim_Z", "dim_B", "dim_H"])
        for b in self.blocks:
            md = "" if b.key.multidegree is None else " ".join(str(x) for x in b.key.multidegree)
            w.writerow([" ".join(str(x) for x in b.key.weight), b.key.degree, md,
                        b.dim_c, b.dim_z, b.dim_b, b.dim_h])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"H^{self.k}({self.algebra}, {self.module})  n={self.n} p={self.p}",
                 f"  dim C = {self.dim_C}  dim Z = {self.dim_Z}  dim B = {self.dim_B}  dim H = {self.dim_H}",
                 f"  blocks computed: {len(self.blocks)}  nonzero: {len(self.nonzero_blocks())}"]
        for b in self.nonzero_blocks():
            lines.append(f"    {b.key.label()}: dim H = {b.dim_h}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# the computation
# ---------------------------------------------------------------------------


def _group_hints(space: CochainSpace, hints) -> dict:
    """Split hint cocycles into their block components, keyed by block."""
    out: dict = {}
    for h in hints or ():
        for (sig, m), c in h.entries.items():
            out.setdefault(space.entry_key(sig, m), {}).setdefault(id(h), {})[(sig, m)] = c
    return out


def _block_job(space: CochainSpace, k: int, keys, hint_comps, want_reps: bool,
               rep_cap: int) -> tuple[BlockAudit, list]:
    t0 = time.perf_counter()
    p = space.p
    sys_k = BlockSystem(space, k, keys)
    c = sys_k.ncols
    # coboundaries: image of C^{k-1} in this block
    echB = Echelon(c, p)
    rank_prev = 0
    if k > 0 and c:
        sys_prev = BlockSystem(space, k - 1, keys)
        if sys_prev.ncols:
            ip, ix, dv = sys_prev.rows(0, sys_prev.nrows)
            tp, tx, tv = _transpose_csr(ip, ix, dv, sys_prev.nrows, sys_prev.ncols)
            echB.add_csr(tp, tx, tv)
            rank_prev = echB.rank
    # verified cocycles independent modulo coboundaries lower the rank bound
    hints_used = 0
    hint_vecs = []
    for comp in (hint_comps or {}).values():
        hint_vecs.append(sys_k.vector(Cochain(space.g, space.M, k, comp)))
    if hint_vecs:
        before = echB.rank
        for v in hint_vecs:
            echB.add_vector(v)
        hints_used = echB.rank - before
    limit = c - rank_prev - hints_used
    ech = TwoPhaseEchelon(c, p, limit=limit)
    nrows = sys_k.nrows
    start = 0
    while start < nrows and not ech.saturated and c:
        stop = min(start + CHUNK, nrows)
        ip, ix, dv = sys_k.rows(start, stop)
        ech.add_csr(ip, ix, dv)
        start = stop
    used = min(ech.rows_seen, nrows)
    rank_k = ech.rank
    dim_z = c - rank_k
    dim_h = dim_z - rank_prev
    if dim_h < 0:
        raise StructureError("negative cohomology dimension: d o d != 0")
    reps = []
    if want_reps and dim_h > 0 and c <= rep_cap:
        Z = ech.nullspace()
        ech_r = Echelon(c, p)
        if k > 0 and rank_prev:
            sys_prev = BlockSystem(space, k - 1, keys)
            ip, ix, dv = sys_prev.rows(0, sys_prev.nrows)
            tp, tx, tv = _transpose_csr(ip, ix, dv, sys_prev.nrows, sys_prev.ncols)
            ech_r.add_csr(tp, tx, tv)
        for z in Z:
            r = ech_r.reduce(z)
            if r.any():
                ech_r.add_vector(r)
                reps.append(r)
                if len(reps) == dim_h:
                    break
    audit = BlockAudit(key=None, dim_c=c, dim_z=dim_z, dim_b=rank_prev, dim_h=dim_h,
                       rank_d=rank_k, rows_total=nrows, rows_used=int(used),
                       early_stop=bool(ech.saturated and used < nrows), hints_used=hints_used,
                       elapsed=time.perf_counter() - t0)
    return audit, [r.tolist() for r in reps]


_POOL_STATE: dict = {}


def _pool_job(args):
    idx, keys, want_reps, rep_cap = args
    st = _POOL_STATE
    hint_comps = {}
    for key in keys:
        for hid, comp in st["hints"].get(key, {}).items():
            hint_comps.setdefault(hid, {}).update(comp)
    audit, reps = _block_job(st["space"], st["k"], keys, hint_comps, want_reps, rep_cap)
    return idx, audit, reps


def estimate_nonzeros(space: CochainSpace, k: int, keys=None) -> dict:
    """Projected size of the differential C^k -> C^{k+1} over the given blocks."""
    if keys is None:
        blocks_k = {key: size for key, _, size in space.blocks(k)}
        blocks_k1 = {key: size for key, _, size in space.blocks(k + 1)}
    else:
        ks = set(keys)
        blocks_k = {key: size for key, _, size in space.blocks(k) if key in ks}
        blocks_k1 = {key: size for key, _, size in space.blocks(k + 1) if key in ks}
    T = _tables(space.g, space.M)
    avg_act = T.iidx.size / max(T.iptr.size - 1, 1)
    avg_br = T.bidx.size / max(T.bptr.size - 1, 1)
    rows = sum(blocks_k1.values())
    per_row = (k + 1) * avg_act + comb(k + 1, 2) * avg_br
    return {"dim_C": sum(blocks_k.values()), "dim_C_next": rows,
            "projected_nonzeros": int(np.ceil(rows * per_row))}


def cohomology(g: LieAlgebra, M: GModule, k: int, weight_zero_only: bool = False,
               degree_filter=None, blocked: bool = True, dim_guard: int = DEFAULT_DIM_GUARD,
               hints=None, representatives: bool = True, rep_cap: int = 6000,
               jobs: int = 1) -> CohomologyReport:
    """H^k(g, M) by exact elimination, one block at a time.

    ``hints`` are cocycles (checked) that may let a block stop eliminating
    early: the rank of d on C^k is at most dim C^k - dim B^k - (number of
    hints independent modulo B^k), so reaching that bound certifies it.
    """
    _check_pair(g, M)
    check_prime(g.p)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if weight_zero_only:
        if not g.torus_inside or not g.torus:
            raise ValueError(f"weight-zero reduction needs the torus inside {g.name}")
        g.check_torus()
        M.check_torus()
    for h in hints or ():
        if h.k != k or h.algebra is not g or h.module is not M:
            raise ValueError(f"hint {h.name or '?'} is not a {k}-cochain of ({g.name}, {M.name})")
        if not is_cocycle(h):
            raise CocycleError(f"hint {h.name or '?'} is not a cocycle")
    space = CochainSpace(g, M)
    chosen = []
    for key, info, size in space.blocks(k):
        if weight_zero_only and any(info.weight):
            continue
        if degree_filter is not None and info.degree not in set(degree_filter):
            continue
        chosen.append((key, info))
    hint_groups = _group_hints(space, hints)
    if not blocked:
        keys = [key for key, _ in chosen]
        est = estimate_nonzeros(space, k, keys)
        if est["projected_nonzeros"] > dim_guard:
            raise GuardError(
                f"unblocked system has about {est['projected_nonzeros']} nonzeros "
                f"(budget {dim_guard}); enable blocking", est)
        units = [(keys, None)] if keys else []
    else:
        units = [([key], info) for key, info in chosen]

    results = [None] * len(units)
    if jobs > 1 and len(units) > 1 and hasattr(os, "fork"):
        import multiprocessing as mp
        _POOL_STATE.update(space=space, k=k, hints=hint_groups)
        ctx = mp.get_context("fork")
        with ctx.Pool(jobs) as pool:
            for idx, audit, reps in pool.imap_unordered(
                    _pool_job, [(i, u[0], representatives, rep_cap) for i, u in enumerate(units)]):
                results[idx] = (audit, reps)
        _POOL_STATE.clear()
    else:
        for i, (keys, _) in enumerate(units):
            hint_comps = {}
            for key in keys:
                for hid, comp in hint_groups.get(key, {}).items():
                    hint_comps.setdefault(hid, {}).update(comp)
            results[i] = _block_job(space, k, keys, hint_comps, representatives, rep_cap)

    blocks, reps = [], []
    for (keys, info), (audit, rvecs) in zip(units, results):
        if info is None:
            info = BlockKey(weight=(), degree=0, multidegree=None)
        audit.key = info
        blocks.append(audit)
        if rvecs:
            sysk = BlockSystem(space, k, keys)
            for j, r in enumerate(rvecs):
                f = sysk.cochain(np.array(r, dtype=np.int64), name=f"rep[{info.label()}#{j}]")
                if not is_cocycle(f):
                    raise StructureError(f"representative {f.name} is not a cocycle")
                reps.append(f)
    options = {"weight_zero_only": bool(weight_zero_only),
               "degree_filter": None if degree_filter is None else sorted(int(d) for d in degree_filter),
               "blocked": bool(blocked), "dim_guard": int(dim_guard),
               "grading": "multidegree" if space.uses_multidegree else "weight-degree",
               "hints": [h.name for h in hints or ()]}
    return CohomologyReport(algebra=g.name, module=M.name, n=g.n, p=g.p, k=k, options=options,
                            blocks=blocks, representatives=reps)


# ---------------------------------------------------------------------------
# independence of classes
# ---------------------------------------------------------------------------


def classes_independent(cocycles) -> tuple[bool, int]:
    """Rank of the classes of ``cocycles`` in H^k; True when it equals their number."""
    cocycles = list(cocycles)
    if not cocycles:
        return True, 0
    g, M, k = cocycles[0].algebra, cocycles[0].module, cocycles[0].k
    for f in cocycles:
        if f.algebra is not g or f.module is not M or f.k != k:
            raise ValueError("cocycles live in different cochain spaces")
        if not is_cocycle(f):
            raise CocycleError(f"{f.name or 'cochain'} is not a cocycle")
    space = CochainSpace(g, M)
    keys = sorted({key for f in cocycles for key in f.keys(space)})
    # reduce each block component modulo B^k_t; the remainders are canonical
    offsets, reduced = {}, [dict() for _ in cocycles]
    total = 0
    for key in keys:
        sysk = BlockSystem(space, k, [key])
        ech = Echelon(sysk.ncols, g.p)
        if k > 0:
            sp = BlockSystem(space, k - 1, [key])
            if sp.ncols:
                ip, ix, dv = sp.rows(0, sp.nrows)
                tp, tx, tv = _transpose_csr(ip, ix, dv, sp.nrows, sp.ncols)
                ech.add_csr(tp, tx, tv)
        offsets[key] = total
        for i, f in enumerate(cocycles):
            r = ech.reduce(sysk.vector(f))
            for j in np.nonzero(r)[0]:
                reduced[i][total + int(j)] = int(r[j])
        total += sysk.ncols
    final = Echelon(max(total, 1), g.p)
    final.add_rows(reduced)
    rank = final.rank
    return rank == len(cocycles), rank


# ---------------------------------------------------------------------------
# relative cochains
# ---------------------------------------------------------------------------


def _relative_basis(space: CochainSpace, k: int, key, h_idx: set, gammas) -> np.ndarray:
    """Basis (rows) of relative cochains in block ``key`` of C^k.

    Relative means: vanishing whenever an argument lies in h, and killed by
    every basis element of h under the cochain action.
    """
    g, M, p = space.g, space.M, space.p
    sysk = BlockSystem(space, k, [key])
    c = sysk.ncols
    if c == 0:
        return np.zeros((0, 0), dtype=np.int64)
    tup = space.groups(k)[0]
    free = [i for i in range(c) if not (set(tup[sysk.col_ti[i]].tolist()) & h_idx)]
    ech = Echelon(c, p)
    # vanishing on tuples meeting h
    ech.add_rows([{i: 1} for i in range(c) if i not in set(free)])
    # gamma . f = 0, one block of constraints per gamma
    for gam in gammas:
        cols = []
        for i in range(c):
            e = sysk.cochain(np.eye(1, c, i, dtype=np.int64)[0])
            cols.append(cochain_action(gam, e))
        # constraint rows: for each output entry, the coefficients on the inputs
        rows: dict = {}
        for i, img in enumerate(cols):
            for ent, v in img.entries.items():
                rows.setdefault(ent, {})[i] = v
        ech.add_rows([rows[e] for e in sorted(rows)])
    return ech.nullspace()


def relative_cohomology(g: LieAlgebra, h_indices, M: GModule, k: int) -> CohomologyReport:
    """H^k(g, h; M) for a subalgebra h spanned by basis elements of g."""
    _check_pair(g, M)
    h_idx = sorted(set(int(i) for i in h_indices))
    for a in h_idx:
        for b in h_idx:
            br = g.bracket_basis(a, b)
            if any(int(w) not in h_idx for w in np.nonzero(br)[0]):
                raise ValueError(f"span of {[g.labels[i] for i in h_idx]} is not a subalgebra")
    hset = set(h_idx)
    gammas = [g.basis_vector(u) for u in h_idx]
    space = CochainSpace(g, M)
    p = g.p
    blocks = []
    for key, info, _ in space.blocks(k):
        t0 = time.perf_counter()
        K = _relative_basis(space, k, key, hset, gammas)
        r = len(K)
        # rank of d on relative k-cochains
        rank_k = 0
        if r:
            Dk = BlockSystem(space, k, [key]).matrix()
            img = (Dk @ sparse.csr_matrix(K.T)).toarray() % p
            if img.size:
                _check_relative_image(space, k + 1, key, hset, img)
                ech = Echelon(r, p)
                ech.add_rows(list(img))
                rank_k = ech.rank
        rank_prev = 0
        if k > 0:
            Kp = _relative_basis(space, k - 1, key, hset, gammas)
            if len(Kp):
                Dp = BlockSystem(space, k - 1, [key]).matrix()
                img = (Dp @ sparse.csr_matrix(Kp.T)).toarray() % p
                ech = Echelon(len(Kp), p)
                ech.add_rows(list(img))
                rank_prev = ech.rank
        dim_z = r - rank_k
        audit = BlockAudit(key=info, dim_c=r, dim_z=dim_z, dim_b=rank_prev,
                           dim_h=dim_z - rank_prev, rank_d=rank_k, rows_total=0, rows_used=0,
                           early_stop=False, elapsed=time.perf_counter() - t0)
        if audit.dim_h < 0:
            raise StructureError("negative relative cohomology dimension")
        blocks.append(audit)
    options = {"weight_zero_only": False, "degree_filter": None, "blocked": True,
               "dim_guard": DEFAULT_DIM_GUARD, "grading": "multidegree" if space.uses_multidegree
               else "weight-degree", "hints": []}
    return CohomologyReport(algebra=g.name, module=M.name, n=g.n, p=p, k=k, options=options,
                            blocks=blocks, representatives=[],
                            relative_to=[g.labels[i] for i in h_idx])


def _check_relative_image(space, k1, key, hset, img):
    """d of relative cochains vanishes on tuples meeting h (closure of the subcomplex)."""
    rows_ti, _ = space.block_entries(k1, [key])
    tup = space.groups(k1)[0]
    meets = np.array([bool(set(tup[t].tolist()) & hset) for t in rows_ti], dtype=bool)
    if meets.any() and np.any(img[meets] % space.p):
        raise StructureError("relative cochains are not closed under d")
