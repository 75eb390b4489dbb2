"""Brute-force ground truth on explicit finite abelian p-groups.

Everything here works by enumerating group elements; nothing reuses the
symbolic height machinery, so agreement with it is a real cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

from .forest import Forest
from .ordinal import INF, Height, Ordinal

ORDER_CAP = 2**14


class OracleError(ValueError):
    pass


@dataclass(frozen=True)
class FiniteModule:
    """The direct sum of Z/p^n over ``exponents``."""

    p: int
    exponents: tuple[int, ...]
    cap: int | None = field(default=ORDER_CAP, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "exponents", tuple(sorted((n for n in self.exponents if n > 0), reverse=True)))
        if self.cap is not None and self.order > self.cap:
            raise OracleError(f"order {self.order} exceeds cap {self.cap}")

    @property
    def order(self) -> int:
        return self.p ** sum(self.exponents)

    @property
    def moduli(self) -> tuple[int, ...]:
        return tuple(self.p**n for n in self.exponents)

    def elements(self):
        return itertools.product(*(range(m) for m in self.moduli))

    def reduce(self, x) -> tuple[int, ...]:
        return tuple(int(a) % m for a, m in zip(x, self.moduli))

    def scale(self, k: int, x) -> tuple[int, ...]:
        return tuple((k * a) % m for a, m in zip(x, self.moduli))

    def add(self, x, y) -> tuple[int, ...]:
        return tuple((a + b) % m for a, b, m in zip(x, y, self.moduli))

    @cached_property
    def _layers(self) -> list[frozenset]:
        """p^k M for k = 0, 1, ... until it reaches zero."""
        layers = [frozenset(self.elements())]
        while len(layers[-1]) > 1:
            layers.append(frozenset(self.scale(self.p, y) for y in layers[-1]))
        return layers

    @cached_property
    def _height_table(self) -> dict:
        table = {}
        for k, layer in enumerate(self._layers):
            for x in layer:
                table[x] = k
        return table


def brute_height(M: FiniteModule, x) -> Height:
    x = M.reduce(x)
    if not any(x):
        return INF
    return Ordinal.of(M._height_table[x])


def coordinate_height(M: FiniteModule, x) -> Height:
    """Height read off the cyclic coordinates: the least p-valuation among the
    nonzero ones.  Needs no enumeration, so it also serves above the cap."""
    x = M.reduce(x)
    vals = []
    for a in x:
        if a:
            v = 0
            while a % M.p == 0:
                a //= M.p
                v += 1
            vals.append(v)
    return Ordinal.of(min(vals)) if vals else INF


def exponent_ulm(M: FiniteModule) -> dict[int, int]:
    """u(k) = number of cyclic summands of order p^(k+1)."""
    out: dict[int, int] = {}
    for e in M.exponents:
        out[e - 1] = out.get(e - 1, 0) + 1
    return out


def _dim(p: int, size: int) -> int:
    d = round(math.log(size, p))
    assert p**d == size
    return d


def brute_ulm(M: FiniteModule) -> dict[int, int]:
    socle_dims = []
    for layer in M._layers:
        socle = [y for y in layer if not any(M.scale(M.p, y))]
        socle_dims.append(_dim(M.p, len(socle)))
    socle_dims.append(0)
    out = {}
    for k in range(len(socle_dims) - 1):
        u = socle_dims[k] - socle_dims[k + 1]
        if u:
            out[k] = u
    return out


def brute_iso(M: FiniteModule, N: FiniteModule) -> bool:
    return M.p == N.p and sorted(M.exponents) == sorted(N.exponents)


# -- evaluating a finite presentation ------------------------------------------


def smith_normal_form(A: list[list[int]]) -> tuple[list[int], list[list[int]]]:
    """Diagonal of the Smith form of an integer matrix together with the
    unimodular column transform V (U A V = D)."""
    A = [row[:] for row in A]
    n_rows = len(A)
    n_cols = len(A[0]) if A else 0
    V = [[int(i == j) for j in range(n_cols)] for i in range(n_cols)]

    def col_op(j_dst, j_src, k):  # col_dst -= k * col_src
        for row in A:
            row[j_dst] -= k * row[j_src]
        for row in V:
            row[j_dst] -= k * row[j_src]

    def swap_cols(a, b):
        for row in A:
            row[a], row[b] = row[b], row[a]
        for row in V:
            row[a], row[b] = row[b], row[a]

    diag = []
    t = 0
    while t < min(n_rows, n_cols):
        nz = [(abs(A[i][j]), i, j) for i in range(t, n_rows) for j in range(t, n_cols) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        A[t], A[i] = A[i], A[t]
        swap_cols(t, j)
        while True:
            done = True
            for j in range(t + 1, n_cols):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    col_op(j, t, q)
                    if A[t][j]:
                        done = False
                        if abs(A[t][j]) < abs(A[t][t]):
                            swap_cols(t, j)
            for i in range(t + 1, n_rows):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                    if A[i][t]:
                        done = False
                        if abs(A[i][t]) < abs(A[t][t]):
                            A[t], A[i] = A[i], A[t]
            if done:
                bad = [(i, j) for i in range(t + 1, n_rows) for j in range(t + 1, n_cols) if A[i][j] % A[t][t]]
                if not bad:
                    break
                i, _ = bad[0]
                A[t] = [a + b for a, b in zip(A[t], A[i])]
        diag.append(abs(A[t][t]))
        if A[t][t] < 0:
            for row in V:
                row[t] = -row[t]
            A[t] = [-a for a in A[t]]
        t += 1
    return diag, V


def realize_finite(forest: Forest, cap: int | None = ORDER_CAP) -> tuple[FiniteModule, dict[str, tuple[int, ...]]]:
    """The finite module presented by a family-free torsion forest, with the
    image of every node."""
    if not forest.is_finite():
        raise OracleError("realize_finite needs a finite torsion forest")
    nodes = sorted(forest.parents)
    if not nodes:
        return FiniteModule(forest.p, ()), {}
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    rel = []
    for v in nodes:
        row = [0] * n
        row[index[v]] = forest.p
        w = forest.parents[v]
        if w is not None:
            row[index[w]] -= 1
        rel.append(row)
    diag, V = smith_normal_form(rel)
    diag += [0] * (n - len(diag))
    keep = [i for i, d in enumerate(diag) if d > 1]
    exps = []
    for i in keep:
        e = round(math.log(diag[i], forest.p))
        if forest.p**e != diag[i]:
            raise OracleError("presentation is not a p-group")
        exps.append(e)
    # FiniteModule sorts exponents descending; keep the matching coordinate order
    order = sorted(range(len(keep)), key=lambda t: -exps[t])
    M = FiniteModule(forest.p, tuple(exps), cap=cap)
    images = {}
    for v in nodes:
        row = V[index[v]]
        images[v] = M.reduce(tuple(row[keep[t]] for t in order))
    return M, images


def vector_of(images: dict[str, tuple[int, ...]], M: FiniteModule, coeffs: dict) -> tuple[int, ...]:
    x = tuple(0 for _ in M.exponents)
    for g, c in coeffs.items():
        x = M.add(x, M.scale(int(c), images[g]))
    return x
