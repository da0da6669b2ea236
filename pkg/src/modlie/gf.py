"""Exact linear algebra over prime fields F_p (odd p <= 251).

Two engines live here:

* :func:`rank_nullspace` -- a Gauss-Jordan elimination on dictionary rows with
  a deterministic sparsest-row pivot rule.  Used for small and medium systems
  where an explicit nullspace basis is wanted.
* :class:`Echelon` -- an incremental sparse echelon form compiled with numba.
  Rows are streamed in (CSR chunks) and reduced one at a time against the
  pivot rows found so far.  This is what the cohomology blocks run on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numba import njit

MAX_PRIME = 251


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def check_prime(p: int) -> int:
    """Validate the characteristic; returns ``p`` unchanged."""
    p = int(p)
    if p == 2:
        raise ValueError("p = 2 is not supported: the constructions divide by 2")
    if not is_prime(p):
        raise ValueError(f"p = {p} is not prime")
    if p > MAX_PRIME:
        raise ValueError(f"p = {p} exceeds the supported bound {MAX_PRIME}")
    return p


@dataclass(frozen=True)
class Fp:
    """A residue modulo an odd prime."""

    value: int
    p: int

    def __post_init__(self):
        check_prime(self.p)
        object.__setattr__(self, "value", int(self.value) % self.p)

    def _coerce(self, other) -> int:
        if isinstance(other, Fp):
            if other.p != self.p:
                raise ValueError("mixing residues of different characteristics")
            return other.value
        return int(other) % self.p

    def __add__(self, other):
        return Fp(self.value + self._coerce(other), self.p)

    __radd__ = __add__

    def __sub__(self, other):
        return Fp(self.value - self._coerce(other), self.p)

    def __rsub__(self, other):
        return Fp(self._coerce(other) - self.value, self.p)

    def __mul__(self, other):
        return Fp(self.value * self._coerce(other), self.p)

    __rmul__ = __mul__

    def __neg__(self):
        return Fp(-self.value, self.p)

    def __truediv__(self, other):
        return self * inv(Fp(self._coerce(other), self.p))

    def __pow__(self, e: int):
        if e < 0:
            return inv(self) ** (-e)
        return Fp(pow(self.value, e, self.p), self.p)

    def __eq__(self, other):
        if isinstance(other, Fp):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.p})"


def inv(x: Fp) -> Fp:
    if x.value == 0:
        raise ZeroDivisionError("non-invertible: 0 has no inverse mod %d" % x.p)
    return Fp(pow(x.value, x.p - 2, x.p), x.p)


def inverse_table(p: int) -> np.ndarray:
    """``t[a] = a^{-1} mod p`` for ``1 <= a < p`` (``t[0] = 0``)."""
    t = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        t[a] = pow(a, p - 2, p)
    return t


@dataclass
class SparseMatrix:
    """Sparse matrix over F_p; ``entries`` maps ``(row, col)`` to a nonzero residue."""

    n_rows: int
    n_cols: int
    p: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        check_prime(self.p)
        clean = {}
        for (r, c), v in self.entries.items():
            if not (0 <= r < self.n_rows and 0 <= c < self.n_cols):
                raise IndexError(f"entry ({r}, {c}) outside {self.n_rows}x{self.n_cols}")
            v = int(v) % self.p
            if v:
                clean[(int(r), int(c))] = v
        self.entries = clean

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[int]], p: int) -> "SparseMatrix":
        a = np.asarray(rows, dtype=np.int64)
        if a.ndim != 2:
            a = a.reshape(len(rows), -1)
        ent = {(int(r), int(c)): int(a[r, c]) for r, c in zip(*np.nonzero(a % p))}
        return cls(a.shape[0], a.shape[1], p, ent)

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n_rows, self.n_cols), dtype=np.int64)
        for (r, c), v in self.entries.items():
            a[r, c] = v
        return a

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.n_cols, self.n_rows, self.p,
                            {(c, r): v for (r, c), v in self.entries.items()})

    def matvec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if v.shape != (self.n_cols,):
            raise ValueError("dimension mismatch")
        out = np.zeros(self.n_rows, dtype=np.int64)
        for (r, c), a in self.entries.items():
            out[r] += a * v[c]
        return out % self.p

    def rows(self) -> list[dict]:
        rows: list[dict] = [dict() for _ in range(self.n_rows)]
        for (r, c), v in self.entries.items():
            rows[r][c] = v
        return rows


def rank_nullspace(M: SparseMatrix) -> tuple[int, list[np.ndarray]]:
    """Rank and a nullspace basis of ``M`` (vectors ``v`` with ``M v = 0``).

    Gauss-Jordan elimination.  At each step the pivot row is a remaining row
    of minimal nonzero count (ties broken by lowest row index) and the pivot
    column is the lowest column of that row.  The row order of the dict
    entries plays no role, so the output is deterministic.
    """
    p = M.p
    rows = {r: row for r, row in enumerate(M.rows()) if row}
    col_rows: dict[int, set] = {}
    for r, row in rows.items():
        for c in row:
            col_rows.setdefault(c, set()).add(r)
    pivots: dict[int, int] = {}  # pivot column -> row id
    done: dict[int, dict] = {}
    while rows:
        r = min(rows, key=lambda i: (len(rows[i]), i))
        row = rows.pop(r)
        c = min(row)
        s = pow(row[c], p - 2, p)
        row = {cc: v * s % p for cc, v in row.items()}
        for cc in row:
            col_rows[cc].discard(r)
        for other in list(col_rows.get(c, ())):
            target = rows[other] if other in rows else done[other]
            f = target[c]
            for cc, v in row.items():
                nv = (target.get(cc, 0) - f * v) % p
                if nv:
                    if cc not in target:
                        col_rows.setdefault(cc, set()).add(other)
                    target[cc] = nv
                else:
                    target.pop(cc, None)
                    col_rows[cc].discard(other)
            if other in rows and not rows[other]:
                del rows[other]
        col_rows.pop(c, None)
        done[r] = row
        pivots[c] = r
        for cc in row:
            if cc != c:
                col_rows.setdefault(cc, set()).add(r)
    rank = len(pivots)
    free = [c for c in range(M.n_cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(M.n_cols, dtype=np.int64)
        v[f] = 1
        for c, r in pivots.items():
            v[c] = (-done[r].get(f, 0)) % p
        basis.append(v)
    return rank, basis


def rank(M: SparseMatrix) -> int:
    ech = Echelon(M.n_cols, M.p)
    ech.add_rows(M.rows())
    return ech.rank


def in_span(v, basis: Sequence, p: int) -> tuple[bool, np.ndarray | None]:
    """Whether ``v`` lies in the span of ``basis``; coordinates when it does."""
    v = np.asarray(v, dtype=np.int64) % p
    if len(basis) == 0:
        return (not v.any(), np.zeros(0, dtype=np.int64) if not v.any() else None)
    B = np.asarray([np.asarray(b, dtype=np.int64) for b in basis]) % p
    if B.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: vectors of length {v.shape[0]} vs {B.shape[1]}")
    # solve B^T c = v
    A = np.concatenate([B.T, v[:, None]], axis=1)
    R, piv = rref(A, p)
    k = len(basis)
    if k in piv:
        return False, None
    coords = np.zeros(k, dtype=np.int64)
    for i, c in enumerate(piv):
        coords[c] = R[i, k]
    return True, coords


def rref(A: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of a dense matrix; returns (R, pivot columns)."""
    R = np.array(A, dtype=np.int64) % p
    piv = _rref_inplace(R, p)
    return R[: len(piv)], list(piv)


@njit(cache=True)
def _rref_inplace(R, p):
    m, n = R.shape
    piv = []
    r = 0
    for c in range(n):
        if r == m:
            break
        k = -1
        for i in range(r, m):
            if R[i, c] != 0:
                k = i
                break
        if k < 0:
            continue
        if k != r:
            for j in range(n):
                t = R[r, j]
                R[r, j] = R[k, j]
                R[k, j] = t
        s = 1
        e = R[r, c]
        b = p - 2
        while b:
            if b & 1:
                s = s * e % p
            e = e * e % p
            b >>= 1
        for j in range(n):
            R[r, j] = R[r, j] * s % p
        for i in range(m):
            if i != r and R[i, c] != 0:
                f = R[i, c]
                for j in range(n):
                    R[i, j] = (R[i, j] - f * R[r, j]) % p
        piv.append(c)
        r += 1
    return np.array(piv, dtype=np.int64)


# ---------------------------------------------------------------------------
# incremental sparse echelon form
# ---------------------------------------------------------------------------


@njit(cache=True)
def _push(heap, n, x):
    i = n
    while i > 0:
        parent = (i - 1) >> 1
        if heap[parent] <= x:
            break
        heap[i] = heap[parent]
        i = parent
    heap[i] = x
    return n + 1


@njit(cache=True)
def _pop(heap, n):
    top = heap[0]
    n -= 1
    if n > 0:
        x = heap[n]
        i = 0
        while True:
            c = 2 * i + 1
            if c >= n:
                break
            if c + 1 < n and heap[c + 1] < heap[c]:
                c += 1
            if heap[c] >= x:
                break
            heap[i] = heap[c]
            i = c
        heap[i] = x
    return top, n


@njit(cache=True)
def _absorb(indptr, indices, data, start, p, invtab, piv, pool_c, pool_v,
            rstart, rlen, state, acc, inheap, heap, limit):
    """Reduce rows ``start..`` of a CSR chunk into the echelon state.

    ``state = [rank, pool_used]``.  Returns the index of the first row not
    consumed: either the end of the chunk, the row at which ``rank`` reached
    ``limit``, or the row at which the pool ran out of space.
    """
    ncols = acc.shape[0]
    cap = pool_c.shape[0]
    nrows = indptr.shape[0] - 1
    for r in range(start, nrows):
        if state[0] >= limit:
            return r
        if state[1] + ncols > cap:
            return r
        hn = 0
        for e in range(indptr[r], indptr[r + 1]):
            c = indices[e]
            v = data[e] % p
            if v == 0:
                continue
            if not inheap[c]:
                inheap[c] = True
                hn = _push(heap, hn, c)
            acc[c] = (acc[c] + v) % p
        while hn > 0:
            c, hn = _pop(heap, hn)
            inheap[c] = False
            v = acc[c]
            if v == 0:
                continue
            pr = piv[c]
            acc[c] = 0
            if pr < 0:
                s = state[1]
                iv = invtab[v]
                pool_c[s] = c
                pool_v[s] = 1
                L = 1
                while hn > 0:
                    cc, hn = _pop(heap, hn)
                    inheap[cc] = False
                    vv = acc[cc]
                    if vv != 0:
                        pool_c[s + L] = cc
                        pool_v[s + L] = vv * iv % p
                        L += 1
                        acc[cc] = 0
                rstart[state[0]] = s
                rlen[state[0]] = L
                piv[c] = state[0]
                state[0] += 1
                state[1] += L
                break
            s = rstart[pr]
            for t in range(s + 1, s + rlen[pr]):
                cc = pool_c[t]
                acc[cc] = (acc[cc] - v * pool_v[t]) % p
                if not inheap[cc]:
                    inheap[cc] = True
                    hn = _push(heap, hn, cc)
    return nrows


@njit(cache=True)
def _reduce_dense(vec, p, piv, pool_c, pool_v, rstart, rlen):
    """Reduce a dense vector in place against the echelon rows (leading terms only)."""
    n = vec.shape[0]
    for c in range(n):
        v = vec[c] % p
        vec[c] = v
        if v == 0:
            continue
        pr = piv[c]
        if pr < 0:
            continue
        s = rstart[pr]
        vec[c] = 0
        for t in range(s + 1, s + rlen[pr]):
            cc = pool_c[t]
            vec[cc] = (vec[cc] - v * pool_v[t]) % p


@njit(cache=True)
def _nullspace(ncols, p, piv, pool_c, pool_v, rstart, rlen, free):
    """Nullspace basis of the echelon rows, one vector per free column."""
    nf = free.shape[0]
    out = np.zeros((nf, ncols), dtype=np.int64)
    pivcols = np.nonzero(piv >= 0)[0]
    for k in range(nf):
        x = out[k]
        x[free[k]] = 1
        for idx in range(pivcols.shape[0] - 1, -1, -1):
            c = pivcols[idx]
            pr = piv[c]
            s = rstart[pr]
            acc = 0
            for t in range(s + 1, s + rlen[pr]):
                acc += pool_v[t] * x[pool_c[t]]
            x[c] = (-acc) % p
    return out


class Echelon:
    """Incremental row echelon form over F_p with ``ncols`` columns.

    Rows are added sparsely; each is reduced against the current pivot rows
    and, if something survives, stored as a new normalized pivot row.  The
    optional ``limit`` stops absorption once the rank reaches it, which is how
    callers certify a rank against a known upper bound without touching every
    row.
    """

    def __init__(self, ncols: int, p: int, limit: int | None = None):
        self.ncols = int(ncols)
        self.p = check_prime(p)
        self.limit = self.ncols if limit is None else min(int(limit), self.ncols)
        self._invtab = inverse_table(self.p)
        n = max(self.ncols, 1)
        self._piv = np.full(n, -1, dtype=np.int64)
        cap = max(4 * n, 1 << 16)
        self._pool_c = np.zeros(cap, dtype=np.int32)
        self._pool_v = np.zeros(cap, dtype=np.int64)
        self._rstart = np.zeros(n, dtype=np.int64)
        self._rlen = np.zeros(n, dtype=np.int64)
        self._state = np.zeros(2, dtype=np.int64)
        self._acc = np.zeros(n, dtype=np.int64)
        self._inheap = np.zeros(n, dtype=np.bool_)
        self._heap = np.zeros(n, dtype=np.int64)
        self.rows_seen = 0

    @property
    def rank(self) -> int:
        return int(self._state[0])

    @property
    def saturated(self) -> bool:
        return self.rank >= self.limit

    @property
    def fill(self) -> int:
        return int(self._state[1])

    def _grow(self):
        cap = 2 * self._pool_c.shape[0]
        pc = np.zeros(cap, dtype=np.int32)
        pv = np.zeros(cap, dtype=np.int64)
        used = self.fill
        pc[:used] = self._pool_c[:used]
        pv[:used] = self._pool_v[:used]
        self._pool_c, self._pool_v = pc, pv

    def add_csr(self, indptr, indices, data) -> bool:
        """Absorb CSR rows; returns True once the rank limit is reached."""
        if self.ncols == 0:
            return True
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.ncols):
            raise IndexError("column index out of range")
        start = 0
        nrows = indptr.shape[0] - 1
        while True:
            nxt = _absorb(indptr, indices, data, start, self.p, self._invtab, self._piv,
                          self._pool_c, self._pool_v, self._rstart, self._rlen,
                          self._state, self._acc, self._inheap, self._heap, self.limit)
            self.rows_seen += nxt - start
            start = nxt
            if start >= nrows or self.saturated:
                return self.saturated
            self._grow()

    def add_rows(self, rows: Iterable) -> bool:
        """Absorb rows given as dicts ``{col: value}`` or dense vectors."""
        indptr = [0]
        indices: list[int] = []
        data: list[int] = []
        for row in rows:
            if isinstance(row, dict):
                items = sorted(row.items())
            else:
                arr = np.asarray(row, dtype=np.int64) % self.p
                if arr.shape != (self.ncols,):
                    raise ValueError("dimension mismatch")
                nz = np.nonzero(arr)[0]
                items = list(zip(nz.tolist(), arr[nz].tolist()))
            for c, v in items:
                indices.append(c)
                data.append(v)
            indptr.append(len(indices))
        return self.add_csr(np.array(indptr), np.array(indices, dtype=np.int64),
                            np.array(data, dtype=np.int64))

    def add_vector(self, vec) -> bool:
        """Add one dense vector; returns True iff it raised the rank."""
        before = self.rank
        saved = self.limit
        self.limit = self.ncols
        self.add_rows([vec])
        self.limit = saved
        return self.rank > before

    def reduce(self, vec) -> np.ndarray:
        out = np.asarray(vec, dtype=np.int64).copy() % self.p
        if out.shape != (self.ncols,):
            raise ValueError("dimension mismatch")
        _reduce_dense(out, self.p, self._piv, self._pool_c, self._pool_v,
                      self._rstart, self._rlen)
        return out

    def contains(self, vec) -> bool:
        return not self.reduce(vec).any()

    def pivot_columns(self) -> np.ndarray:
        return np.nonzero(self._piv[: self.ncols] >= 0)[0]

    def nullspace(self) -> np.ndarray:
        """Basis (as rows) of the vectors annihilated by every absorbed row.

        Only meaningful when every row of the system was absorbed, i.e. the
        limit was never hit before the last row.
        """
        free = np.nonzero(self._piv[: self.ncols] < 0)[0].astype(np.int64)
        if self.ncols == 0:
            return np.zeros((0, 0), dtype=np.int64)
        return _nullspace(self.ncols, self.p, self._piv, self._pool_c, self._pool_v,
                          self._rstart, self._rlen, free)


# ---------------------------------------------------------------------------
# two-phase elimination: sparse until few columns stay free, then project
# ---------------------------------------------------------------------------


@njit(cache=True)
def _free_coordinates(ncols, p, piv, pool_c, pool_v, rstart, rlen, fpos, nfree):
    """Fully reduce the echelon: pivot row c becomes e_c + A[piv[c]] (free columns only)."""
    rank = 0
    for c in range(ncols):
        if piv[c] >= 0:
            rank += 1
    A = np.zeros((rank, nfree), dtype=np.int64)
    for c in range(ncols - 1, -1, -1):
        pr = piv[c]
        if pr < 0:
            continue
        row = A[pr]
        s = rstart[pr]
        for t in range(s + 1, s + rlen[pr]):
            cc = pool_c[t]
            v = pool_v[t]
            if fpos[cc] >= 0:
                row[fpos[cc]] += v
            else:
                other = A[piv[cc]]
                for j in range(nfree):
                    row[j] -= v * other[j]
        for j in range(nfree):
            row[j] %= p
    return A


@njit(cache=True)
def _project_absorb(indptr, indices, data, start, p, invtab, piv, fpos, A, E2, lead2, state, limit):
    """Project rows onto the free columns and absorb them into the dense echelon E2.

    ``state = [rank2, total rank]``; ``lead2[j]`` is the free-coordinate pivot of E2 row j.
    E2 is kept fully reduced.  Returns the first row not consumed.
    """
    nfree = A.shape[1]
    nrows = indptr.shape[0] - 1
    q = np.zeros(nfree, dtype=np.int64)
    for r in range(start, nrows):
        if state[1] >= limit:
            return r
        for j in range(nfree):
            q[j] = 0
        for e in range(indptr[r], indptr[r + 1]):
            c = indices[e]
            v = data[e] % p
            if v == 0:
                continue
            if fpos[c] >= 0:
                q[fpos[c]] += v
            else:
                row = A[piv[c]]
                for j in range(nfree):
                    q[j] -= v * row[j]
        for j in range(nfree):
            q[j] %= p
        for i in range(state[0]):
            v = q[lead2[i]]
            if v != 0:
                for j in range(nfree):
                    q[j] = (q[j] - v * E2[i, j]) % p
        lead = -1
        for j in range(nfree):
            if q[j] != 0:
                lead = j
                break
        if lead < 0:
            continue
        iv = invtab[q[lead]]
        for j in range(nfree):
            q[j] = q[j] * iv % p
        for i in range(state[0]):
            v = E2[i, lead]
            if v != 0:
                for j in range(nfree):
                    E2[i, j] = (E2[i, j] - v * q[j]) % p
        k = state[0]
        for j in range(nfree):
            E2[k, j] = q[j]
        lead2[k] = lead
        state[0] += 1
        state[1] += 1
    return nrows


class TwoPhaseEchelon:
    """Rank of a streamed sparse system, for systems of nearly full column rank.

    Rows first go into a sparse :class:`Echelon`.  Once few columns remain
    free and new rows mostly reduce to zero, the sparse echelon is fully
    reduced into its free-column coordinates ``A``; every later row ``v`` is
    then replaced by ``v_F - v_P A`` (its canonical representative modulo the
    sparse row space) and absorbed into a small dense echelon.  The total
    rank is the sum of both ranks; the nullspace lifts back through ``A``.
    """

    SUBCHUNK = 2000

    def __init__(self, ncols: int, p: int, limit: int | None = None, max_free: int = 512,
                 stall_yield: float = 0.25):
        self.ncols = int(ncols)
        self.p = check_prime(p)
        self.limit = self.ncols if limit is None else min(int(limit), self.ncols)
        self.max_free = int(max_free)
        self.stall_yield = float(stall_yield)
        self.sparse = Echelon(ncols, p, limit=self.limit)
        self.phase = 1
        self.rows_seen = 0

    @property
    def rank(self) -> int:
        if self.phase == 1:
            return self.sparse.rank
        return int(self._state[1])

    @property
    def saturated(self) -> bool:
        return self.rank >= self.limit

    def _switch(self):
        ech = self.sparse
        piv = ech._piv[: max(self.ncols, 1)]
        free = np.nonzero(piv[: self.ncols] < 0)[0].astype(np.int64)
        fpos = np.full(max(self.ncols, 1), -1, dtype=np.int64)
        fpos[free] = np.arange(free.size)
        self._free = free
        self._fpos = fpos
        self._A = _free_coordinates(self.ncols, self.p, piv, ech._pool_c, ech._pool_v,
                                    ech._rstart, ech._rlen, fpos, free.size)
        self._E2 = np.zeros((max(free.size, 1), max(free.size, 1)), dtype=np.int64)
        self._lead2 = np.zeros(max(free.size, 1), dtype=np.int64)
        self._state = np.array([0, ech.rank], dtype=np.int64)
        self.phase = 2

    def add_csr(self, indptr, indices, data) -> bool:
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        data = np.asarray(data, dtype=np.int64)
        nrows = indptr.shape[0] - 1
        start = 0
        while start < nrows and not self.saturated:
            if self.phase == 1:
                stop = min(start + self.SUBCHUNK, nrows)
                before = self.sparse.rank
                seen = self.sparse.rows_seen
                sub = indptr[start:stop + 1]
                lo, hi = sub[0], sub[-1]
                self.sparse.add_csr(sub - lo, indices[lo:hi], data[lo:hi])
                used = self.sparse.rows_seen - seen
                self.rows_seen += used
                start += used
                gained = self.sparse.rank - before
                if (not self.saturated and used
                        and self.ncols - self.sparse.rank <= self.max_free
                        and gained < self.stall_yield * used):
                    self._switch()
            else:
                nxt = _project_absorb(indptr, indices, data, start, self.p, self.sparse._invtab,
                                      self.sparse._piv, self._fpos, self._A, self._E2,
                                      self._lead2, self._state, self.limit)
                self.rows_seen += nxt - start
                start = nxt
        return self.saturated

    def nullspace(self) -> np.ndarray:
        """Basis of the common kernel of all absorbed rows (valid after the last row)."""
        if self.phase == 1:
            return self.sparse.nullspace()
        p = self.p
        nfree = self._free.size
        r2 = int(self._state[0])
        lead = self._lead2[:r2]
        free2 = [j for j in range(nfree) if j not in set(lead.tolist())]
        out = np.zeros((len(free2), self.ncols), dtype=np.int64)
        pivcols = np.nonzero(self.sparse._piv[: self.ncols] >= 0)[0]
        prow = self.sparse._piv[pivcols]
        for k, g in enumerate(free2):
            zF = np.zeros(nfree, dtype=np.int64)
            zF[g] = 1
            for i in range(r2):
                zF[lead[i]] = -self._E2[i, g] % p
            out[k, self._free] = zF
            out[k, pivcols] = -(self._A[prow] @ zF) % p
        return out
