import functools
import numpy as np
import pytest


def oracle_rank(rows, p):
    """Textbook Gaussian elimination on Python lists; deliberately naive."""
    A = [[int(x) % p for x in r] for r in rows]
    if not A:
        return 0
    ncols = len(A[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(A)) if A[r][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], p - 2, p)
        A[rank] = [x * inv % p for x in A[rank]]
        for r in range(len(A)):
            if r != rank and A[r][c]:
                f = A[r][c]
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[rank])]
        rank += 1
    return rank


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


@functools.lru_cache(maxsize=None)
def witt(n, p):
    from modlie.algebras import build_W
    return build_W(n, p)


@functools.lru_cache(maxsize=None)
def special(n, p):
    from modlie.algebras import build_S
    return build_S(n, p)


def oracle_rank_np(A, p):
    """Dense Gaussian elimination with numpy row operations, for mid-size oracles."""
    A = np.array(A, dtype=np.int64) % p
    r = 0
    rows, cols = A.shape if A.ndim == 2 else (0, 0)
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * pow(int(A[r, c]), p - 2, p) % p
        below = np.nonzero(A[:, c])[0]
        below = below[below != r]
        A[below] = (A[below] - np.outer(A[below, c], A[r])) % p
        r += 1
    return r


def oracle_differential(g, M, k):
    """Dense matrix of d: C^k -> C^{k+1} straight from the Chevalley-Eilenberg formula.

    Columns are (tau, m_in) with tau an increasing k-tuple, rows (sigma, m_out).
    """
    import itertools
    p, N, D = g.p, g.dim, M.dim
    cols = list(itertools.combinations(range(N), k))
    rows = list(itertools.combinations(range(N), k + 1))
    cpos = {t: i for i, t in enumerate(cols)}
    rho = [M.matrix(u) for u in range(N)]
    C = g.structure_tensor  # C[u, v, w]
    out = np.zeros((len(rows) * D, len(cols) * D), dtype=np.int64)
    for r, sig in enumerate(rows):
        for i in range(k + 1):
            t = cpos[sig[:i] + sig[i + 1:]]
            blk = (-1) ** i * rho[sig[i]]
            out[r * D:(r + 1) * D, t * D:(t + 1) * D] += blk
        for a in range(k + 1):
            for b in range(a + 1, k + 1):
                rest = [x for j, x in enumerate(sig) if j not in (a, b)]
                for w in np.nonzero(C[sig[a], sig[b]])[0]:
                    args = [int(w)] + rest
                    if len(set(args)) < len(args):
                        continue
                    inv = sum(1 for x in range(len(args)) for y in range(x + 1, len(args))
                              if args[x] > args[y])
                    t = cpos[tuple(sorted(args))]
                    coef = (-1) ** (a + b) * (-1) ** inv * int(C[sig[a], sig[b], w])
                    for m in range(D):
                        out[r * D + m, t * D + m] += coef
    return out % p
