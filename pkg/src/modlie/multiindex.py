"""Exponent tuples of the truncated polynomial ring A(n) = F[x_1..x_n]/(x_i^p)."""

from __future__ import annotations

import itertools
from math import comb
from typing import Iterator

MultiIndex = tuple[int, ...]


def validate(a: MultiIndex, n: int, p: int) -> MultiIndex:
    a = tuple(int(x) for x in a)
    if len(a) != n:
        raise ValueError(f"multi-index {a} has length {len(a)}, expected {n}")
    if any(x < 0 or x > p - 1 for x in a):
        raise ValueError(f"multi-index {a} has entries outside [0, {p - 1}]")
    return a


def zero(n: int) -> MultiIndex:
    return (0,) * n


def eps(j: int, n: int) -> MultiIndex:
    """Unit vector; ``j`` is 1-based as in x_j and D_j."""
    if not 1 <= j <= n:
        raise ValueError(f"index {j} out of range 1..{n}")
    return tuple(1 if i == j - 1 else 0 for i in range(n))


def tau(n: int, p: int) -> MultiIndex:
    return (p - 1,) * n


def degree(a: MultiIndex) -> int:
    return sum(a)


def add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def fits(a: MultiIndex, p: int) -> bool:
    """True when every entry lies in [0, p-1] (the monomial survives truncation)."""
    return all(0 <= x <= p - 1 for x in a)


def all_indices(n: int, p: int) -> list[MultiIndex]:
    """Every exponent tuple, ordered by degree and then lexicographically."""
    return sorted(itertools.product(range(p), repeat=n), key=lambda a: (sum(a), a))


def iter_below(a: MultiIndex) -> Iterator[MultiIndex]:
    """All b with 0 <= b <= a componentwise."""
    return itertools.product(*(range(x + 1) for x in a))


def binom_mod_p(a: MultiIndex, b: MultiIndex, p: int) -> int:
    """prod_i C(a_i, b_i) mod p; zero as soon as some b_i > a_i."""
    out = 1
    for x, y in zip(a, b):
        if y < 0 or y > x:
            return 0
        out = out * comb(x, y) % p
    return out


def weight_mod_p(a: MultiIndex, p: int) -> tuple[int, ...]:
    return tuple(x % p for x in a)


def render(a: MultiIndex) -> str:
    return "x^(" + ",".join(str(x) for x in a) + ")"
