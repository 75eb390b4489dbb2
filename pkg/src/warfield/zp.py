"""Linear algebra over Z_(p), the integers localized at p.

Z_(p) is a discrete valuation ring, so full pivoting on the entry of least
p-valuation diagonalizes any matrix with invertible row and column
operations.  Entries are Fractions whose denominators are prime to p.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class NotLocal(ValueError):
    pass


def valuation(x: Fraction, p: int) -> int:
    n = x.numerator
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    d = x.denominator
    while d % p == 0:
        d //= p
        v -= 1
    return v


def is_local(x: Fraction, p: int) -> bool:
    return Fraction(x).denominator % p != 0


def _diagonalize(A, p, b=None, track=False):
    n = len(A)
    m = len(A[0]) if n else 0
    A = [list(row) for row in A]
    b = list(b) if b is not None else None
    Q = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)] if track else None
    diag = []
    r = 0
    while r < min(n, m):
        best = None
        for i in range(r, n):
            row = A[i]
            for j in range(r, m):
                x = row[j]
                if x:
                    v = valuation(x, p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        _, i, j = best
        if i != r:
            A[r], A[i] = A[i], A[r]
            if b is not None:
                b[r], b[i] = b[i], b[r]
        if j != r:
            for row in A:
                row[r], row[j] = row[j], row[r]
            if Q is not None:
                for row in Q:
                    row[r], row[j] = row[j], row[r]
        a = A[r][r]
        for j in range(r + 1, m):
            x = A[r][j]
            if x:
                f = x / a
                for i in range(r, n):
                    y = A[i][r]
                    if y:
                        A[i][j] -= f * y
                if Q is not None:
                    for row in Q:
                        y = row[r]
                        if y:
                            row[j] -= f * y
        for i in range(r + 1, n):
            x = A[i][r]
            if x:
                f = x / a
                A[i][r] = Fraction(0)
                if b is not None and b[r]:
                    b[i] -= f * b[r]
        diag.append(a)
        r += 1
    return diag, b, Q


def solve(columns: Sequence[Sequence[Fraction]], target: Sequence[Fraction], p: int):
    """Coefficients z in Z_(p) with sum z_j * columns[j] == target, or None."""
    n = len(target)
    if not columns:
        return [] if not any(target) else None
    A = [[Fraction(col[i]) for col in columns] for i in range(n)]
    diag, b, Q = _diagonalize(A, p, [Fraction(t) for t in target], track=True)
    r = len(diag)
    if any(b[i] for i in range(r, n)):
        return None
    zprime = []
    for k in range(r):
        q = b[k] / diag[k]
        if q and not is_local(q, p):
            return None
        zprime.append(q)
    m = len(columns)
    return [sum((Q[j][k] * zprime[k] for k in range(r) if zprime[k]), Fraction(0)) for j in range(m)]


def kernel(columns: Sequence[Sequence[Fraction]], n_rows: int, p: int) -> list[list[Fraction]]:
    """A Z_(p)-basis of the relation module {z : sum z_j columns[j] = 0}."""
    m = len(columns)
    if m == 0:
        return []
    A = [[Fraction(col[i]) for col in columns] for i in range(n_rows)]
    diag, _, Q = _diagonalize(A, p, None, track=True)
    r = len(diag)
    return [[Q[j][k] for j in range(m)] for k in range(r, m)]


def rank_mod_p(vectors: Sequence[Sequence[Fraction]], p: int) -> int:
    """Rank over Z/p of the reductions of Z_(p)-vectors."""
    rows = []
    for vec in vectors:
        rows.append([(x.numerator * pow(x.denominator, -1, p)) % p for x in map(Fraction, vec)])
    rank = 0
    width = len(rows[0]) if rows else 0
    for c in range(width):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = pow(rows[rank][c], -1, p)
        rows[rank] = [(x * inv) % p for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(x - f * y) % p for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank
