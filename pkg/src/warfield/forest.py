"""Schematic simply presented modules encoded as forests.

Each node is a generator; the defining relations are ``p * child = parent``
and ``p * root = 0`` for torsion roots.  Roots declared *free* have no
relation and so have infinite order; they carry the torsion-free rank.

Countable families hang below a node (or as new roots):

* ``chains``: one chain of each length n >= 1 (the generalized Pruefer device),
* ``const``: countably many chains of a fixed length c,
* ``spine``: an infinite descending chain, making the attach point divisible.

Family members are addressed as ``fam{j}:{m},{d}`` (family j, member m >= 1,
depth d below the attach point, 0 = directly below).  Trees listed in
``replicated`` stand for countably many copies; copy k >= 1 of a node ``v`` is
addressed as ``v#k``.

Every element has a unique normal form: digits in [0, p) on nodes and a
p-local coefficient on each free root.  ``p^a G`` is spanned by the nodes of
height >= a (and the multiples of free roots that reach height a), so the
height of an element is the least height met in its normal-form support.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping

from .ordinal import INF, OMEGA, ZERO, Height, Ordinal, min_height, sup_of_family


class ForestError(ValueError):
    pass


FAMILY_KINDS = ("chains", "const", "spine")

_MEMBER = re.compile(r"^fam(\d+):(\d+),(\d+)$")


@dataclass(frozen=True)
class Family:
    attach: str | None  # None: chains are new roots
    kind: str
    length: int = 0  # only for kind == "const"

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ForestError(f"unknown family kind {self.kind!r}")
        if self.kind == "const" and self.length < 1:
            raise ForestError("const family needs a chain length >= 1")
        if self.kind == "spine" and self.attach is None:
            raise ForestError("a divisible spine must hang below a node")

    def member_length(self, m: int) -> int | None:
        """Number of nodes in member m; None for the infinite spine."""
        if self.kind == "chains":
            return m
        if self.kind == "const":
            return self.length
        return None

    def pattern(self) -> str:
        return {"chains": "chains:n", "const": f"chains:const:{self.length}", "spine": "divisible-spine"}[
            self.kind
        ]


def split_copy(gen: str) -> tuple[str, int]:
    base, sep, k = gen.partition("#")
    if not sep:
        return gen, 0
    if not k.isdigit() or int(k) < 1:
        raise ForestError(f"bad copy index in {gen!r}")
    return base, int(k)


def with_copy(gen: str, k: int) -> str:
    return gen if k == 0 else f"{gen}#{k}"


def member_id(j: int, m: int, d: int) -> str:
    return f"fam{j}:{m},{d}"


def cardinal_add(a, b):
    if a == OMEGA or b == OMEGA:
        return OMEGA
    return a + b


@dataclass(frozen=True)
class Forest:
    p: int
    parents: Mapping[str, str | None]
    free: tuple[str, ...] = ()
    families: tuple[Family, ...] = ()
    replicated: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "parents", dict(self.parents))
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "replicated", frozenset(self.replicated))
        self._validate()

    # -- construction checks -----------------------------------------------
    def _validate(self):
        if self.p < 2 or any(self.p % q == 0 for q in range(2, int(self.p**0.5) + 1)):
            raise ForestError(f"p = {self.p} is not prime")
        for g in self.free:
            if g in self.parents:
                raise ForestError(f"free root {g!r} also declared as a node")
        known = set(self.parents) | set(self.free)
        for v, w in self.parents.items():
            if _MEMBER.match(v) or "#" in v or not v:
                raise ForestError(f"reserved node id {v!r}")
            if w is not None and w not in known:
                raise ForestError(f"node {v!r} has unknown parent {w!r}")
        for v in self.parents:
            seen = {v}
            w = self.parents[v]
            while w is not None and w in self.parents:
                if w in seen:
                    raise ForestError(f"parent cycle through {v!r}")
                seen.add(w)
                w = self.parents[w]
        for fam in self.families:
            if fam.attach is not None and fam.attach not in known:
                raise ForestError(f"family attached to unknown node {fam.attach!r}")
        for fam in self.families:
            if fam.kind == "spine" and self.root_of(fam.attach) in self.free:
                raise ForestError("divisible spines must lie in torsion trees")
        for r in self.replicated:
            if r not in known or self.root_of(r) != r:
                raise ForestError(f"replicated entry {r!r} is not a root")

    # -- generator structure -----------------------------------------------
    def is_free_root(self, gen: str) -> bool:
        return split_copy(gen)[0] in self.free

    def explicit_nodes(self) -> list[str]:
        return list(self.parents) + list(self.free)

    def parent(self, gen: str) -> str | None:
        base, k = split_copy(gen)
        m = _MEMBER.match(base)
        if m:
            j, mem, d = (int(x) for x in m.groups())
            fam = self._family(j)
            ln = fam.member_length(mem)
            if mem < 1 or (ln is not None and d >= ln) or (fam.kind == "spine" and mem != 1):
                raise ForestError(f"no such family member {gen!r}")
            par = fam.attach if d == 0 else member_id(j, mem, d - 1)
        elif base in self.parents:
            par = self.parents[base]
        elif base in self.free:
            par = None
        else:
            raise ForestError(f"unknown node {gen!r}")
        if k:
            if self._root_base(base) not in self.replicated:
                raise ForestError(f"{gen!r}: tree is not replicated")
            return None if par is None else with_copy(par, k)
        return par

    def _family(self, j: int) -> Family:
        if j >= len(self.families):
            raise ForestError(f"no family {j}")
        return self.families[j]

    def _root_base(self, base: str) -> str:
        v = base
        while True:
            m = _MEMBER.match(v)
            if m:
                fam = self._family(int(m.group(1)))
                if fam.attach is None:
                    return member_id(int(m.group(1)), int(m.group(2)), 0)
                v = fam.attach
                continue
            w = self.parents.get(v)
            if w is None:
                return v
            v = w

    def root_of(self, gen: str) -> str:
        v = gen
        while True:
            w = self.parent(v)
            if w is None:
                return v
            v = w

    def depth(self, gen: str) -> int:
        d, v = 0, gen
        while (v := self.parent(v)) is not None:
            d += 1
        return d

    def exists(self, gen: str) -> bool:
        try:
            self.parent(gen)
        except ForestError:
            return False
        return True

    @cached_property
    def _explicit_children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = defaultdict(list)
        for v, w in sorted(self.parents.items()):
            if w is not None:
                out[w].append(v)
        return out

    def families_at(self, gen: str) -> list[int]:
        base = split_copy(gen)[0]
        return [j for j, f in enumerate(self.families) if f.attach == base]

    # -- heights -------------------------------------------------------------
    @cached_property
    def _explicit_heights(self) -> dict[str, Height]:
        memo: dict[str, Height] = {}

        def h(v: str) -> Height:
            if v in memo:
                return memo[v]
            parts: list[Height] = []
            for c in self._explicit_children.get(v, ()):
                parts.append(h(c).plus(1) if h(c) is not INF else INF)
            for j in self.families_at(v):
                fam = self.families[j]
                if fam.kind == "chains":
                    parts.append(OMEGA)
                elif fam.kind == "const":
                    parts.append(Ordinal.of(fam.length))
                else:
                    parts.append(INF)
            memo[v] = sup_of_family(parts) if parts else ZERO
            return memo[v]

        for v in self.explicit_nodes():
            h(v)
        return memo

    def node_height(self, gen: str) -> Height:
        base, _ = split_copy(gen)
        m = _MEMBER.match(base)
        if m:
            self.parent(gen)
            j, mem, d = (int(x) for x in m.groups())
            fam = self.families[j]
            if fam.kind == "spine":
                return INF
            return Ordinal.of(fam.member_length(mem) - 1 - d)
        if base not in self._explicit_heights:
            raise ForestError(f"unknown node {gen!r}")
        self.parent(gen)
        return self._explicit_heights[base]

    def children(self, gen: str, limit: int = 3) -> list[str]:
        """Explicit children, then the first ``limit`` members of each family."""
        base, k = split_copy(gen)
        m = _MEMBER.match(base)
        out: list[str] = []
        if m:
            j, mem, d = (int(x) for x in m.groups())
            ln = self.families[j].member_length(mem)
            if ln is None or d + 1 < ln:
                out.append(member_id(j, mem, d + 1))
        else:
            out.extend(self._explicit_children.get(base, ()))
            for j in self.families_at(base):
                fam = self.families[j]
                if fam.kind == "spine":
                    out.append(member_id(j, 1, 0))
                else:
                    out.extend(member_id(j, mm, 0) for mm in range(1, limit + 1))
        return [with_copy(c, k) for c in out]

    def child_of_height_at_least(self, gen: str, target: Height) -> str:
        """Some child whose height is >= target, preferring the lowest such."""
        base, k = split_copy(gen)
        cands = [c for c in self.children(gen, limit=0) if not self.node_height(c) < target]
        if cands:
            return min(cands, key=lambda c: (height_key(self.node_height(c)), c))
        for j in self.families_at(base):
            fam = self.families[j]
            if fam.kind == "const" and not Ordinal.of(fam.length - 1) < target:
                return with_copy(member_id(j, 1, 0), k)
            if fam.kind == "chains" and target is not INF and target.is_finite():
                return with_copy(member_id(j, target.finite_part + 1, 0), k)
        raise ForestError(f"{gen!r} has no child of height >= {target}")

    # -- elements ------------------------------------------------------------
    def normal_form(self, coeffs: Mapping[str, object]) -> tuple[dict[str, int], dict[str, Fraction]]:
        """Digits in [1, p) on nodes and nonzero p-local coefficients on free roots."""
        p = self.p
        pending: dict[str, Fraction] = {}
        for g, c in coeffs.items():
            c = Fraction(c)
            if c:
                if c.denominator % p == 0:
                    raise ForestError(f"coefficient {c} of {g} is not p-local")
                pending[g] = pending.get(g, Fraction(0)) + c
        depth = {g: self.depth(g) for g in pending}
        digits: dict[str, int] = {}
        free: dict[str, Fraction] = {}
        while pending:
            g = max(pending, key=lambda v: (depth[v], v))
            c = pending.pop(g)
            if self.is_free_root(g):
                if c:
                    free[g] = c
                continue
            d = (c.numerator * pow(c.denominator, -1, p)) % p
            if d:
                digits[g] = d
            carry = (c - d) / p
            w = self.parent(g)
            if carry and w is not None:
                if w not in pending:
                    depth[w] = depth[g] - 1
                    pending[w] = Fraction(0)
                pending[w] += carry
        return digits, free

    def element_height(self, coeffs: Mapping[str, object]) -> Height:
        digits, free = self.normal_form(coeffs)
        parts: list[Height] = [self.node_height(v) for v in digits]
        for g, c in free.items():
            parts.append(self.node_height(g).plus(vp(c, self.p)))
        return min_height(parts)

    def free_content(self, coeffs: Mapping[str, object]) -> dict[str, Fraction]:
        """Image in the rational span of the free roots (node v below root g is g / p^depth)."""
        out: dict[str, Fraction] = {}
        for g, c in coeffs.items():
            c = Fraction(c)
            if not c:
                continue
            r = self.root_of(g)
            if self.is_free_root(r):
                out[r] = out.get(r, Fraction(0)) + c / Fraction(self.p) ** self.depth(g)
        return {g: c for g, c in out.items() if c}

    def is_torsion(self, coeffs: Mapping[str, object]) -> bool:
        return not self.free_content(coeffs)

    # -- invariants ----------------------------------------------------------
    def main_child(self, gen: str) -> str | None:
        """The child paired with a node of successor height (None otherwise)."""
        h = self.node_height(gen)
        if h is INF or not h.is_successor():
            return None
        want = h.predecessor()
        for c in self.children(gen, limit=0):
            if self.node_height(c) == want:
                return c
        base, k = split_copy(gen)
        for j in self.families_at(base):
            fam = self.families[j]
            if fam.kind == "const" and fam.length - 1 == want:
                return with_copy(member_id(j, 1, 0), k)
            if fam.kind == "chains" and want.is_finite():
                return with_copy(member_id(j, want.finite_part + 1, 0), k)
        raise AssertionError(f"successor height without a witnessing child at {gen}")

    def is_excess(self, gen: str) -> bool:
        if self.is_free_root(gen):
            return False
        if self.node_height(gen) is INF:
            return False
        w = self.parent(gen)
        return w is None or self.main_child(w) != gen

    def ulm_invariants(self) -> "UlmCounts":
        """Per-height socle layer dimensions, capped at w."""
        counts: dict[Height, object] = {}
        every_finite = 0
        for v in self.explicit_nodes():
            mult = OMEGA if self._root_base(v) in self.replicated else 1
            if self.is_excess(v):
                h = self.node_height(v)
                counts[h] = cardinal_add(counts.get(h, 0), mult)
        for j, fam in enumerate(self.families):
            rep = fam.attach is not None and self._root_base(fam.attach) in self.replicated
            mult = OMEGA if rep else 1
            if fam.kind == "spine":
                counts[INF] = cardinal_add(counts.get(INF, 0), mult)
            elif fam.kind == "const":
                h = Ordinal.of(fam.length - 1)
                counts[h] = OMEGA
            else:
                # the attach point has limit height, so every chain top is excess
                every_finite = cardinal_add(every_finite, mult)
        return UlmCounts(counts, every_finite)

    def excess_nodes(self, sigma: Height, member_limit: int = 2, copy_limit: int = 1) -> list[str]:
        """Excess nodes of height sigma: explicit ones, plus members of families
        (up to ``member_limit`` for infinite families) and of replicated copies."""
        out: list[str] = []
        bases: list[str] = []
        for v in self.explicit_nodes():
            if self.node_height(v) == sigma and self.is_excess(v):
                bases.append(v)
        for j, fam in enumerate(self.families):
            if fam.kind == "chains" and sigma is not INF and sigma.is_finite():
                bases.append(member_id(j, sigma.finite_part + 1, 0))
            elif fam.kind == "const" and sigma == Ordinal.of(fam.length - 1):
                members = [member_id(j, m, 0) for m in range(1, member_limit + 2)]
                bases.extend([v for v in members if self.is_excess(v)][:member_limit])
        for v in bases:
            out.append(v)
            if self._root_base(split_copy(v)[0]) in self.replicated:
                out.extend(with_copy(v, k) for k in range(1, copy_limit + 1))
        return out

    def socle_element(self, gen: str) -> dict[str, int]:
        """A socle element of height h(gen) representing an excess node."""
        w = self.parent(gen)
        if w is None:
            return {gen: 1}
        m = self.main_child(w)
        if m is None:
            h = self.node_height(gen)
            target = INF if self.node_height(w) is INF else h.plus(1)
            m = self.child_of_height_at_least(w, target)
        if m == gen:
            raise ForestError(f"{gen!r} is not excess")
        return {gen: 1, m: -1}

    def infinite_socle(self) -> list[dict[str, int]]:
        """A basis of the socle of the divisible part (one element per spine)."""
        out: list[dict[str, int]] = []
        inf_nodes = [v for v in self.explicit_nodes() if self.node_height(v) is INF]
        for v in sorted(inf_nodes):
            kids = [c for c in self._explicit_children.get(v, ()) if self.node_height(c) is INF]
            kids += [member_id(j, 1, 0) for j in self.families_at(v) if self.families[j].kind == "spine"]
            if self.parent(v) is None:
                out.append({v: 1})
            for c in kids[1:]:
                out.append({c: 1, kids[0]: -1})
        return out

    def length(self) -> Height:
        """Least a with p^a G = p^(a+1) G."""
        parts: list[Height] = []
        for v in self.explicit_nodes():
            h = self.node_height(v)
            if h is not INF:
                parts.append(h.plus(1))
        for fam in self.families:
            if fam.kind == "chains":
                parts.append(OMEGA)
            elif fam.kind == "const":
                parts.append(Ordinal.of(fam.length))
        for g in self.free:
            parts.append(("linear", self.node_height(g)))
        out: Height = ZERO
        for part in parts:
            h = sup_of_family(part) if isinstance(part, tuple) else part
            if out < h:
                out = h
        return out

    def is_finite(self) -> bool:
        return not self.families and not self.free and not self.replicated

    def instantiate(self, truncation: int) -> "Forest":
        """Replace every family by its first ``truncation`` members (a spine by a
        chain of that length) and replicated trees by ``truncation`` copies."""
        if truncation < 1:
            raise ForestError("truncation must be >= 1")
        parents: dict[str, str | None] = dict(self.parents)
        for j, fam in enumerate(self.families):
            members = [1] if fam.kind == "spine" else range(1, truncation + 1)
            for m in members:
                ln = truncation if fam.kind == "spine" else fam.member_length(m)
                for d in range(ln):
                    parents[_flat(member_id(j, m, d))] = (
                        fam.attach if d == 0 else _flat(member_id(j, m, d - 1))
                    )
        free = list(self.free)
        for r in self.replicated:
            tree = [v for v in list(parents) + free if self._root_flat(parents, v) == r]
            for k in range(1, truncation):
                for v in tree:
                    if v in free:
                        free.append(f"{v}_c{k}")
                    else:
                        w = parents[v]
                        parents[f"{v}_c{k}"] = None if w is None else f"{w}_c{k}"
        return Forest(self.p, parents, tuple(free), (), frozenset())

    def _root_flat(self, parents, v):
        while parents.get(v) is not None:
            v = parents[v]
        return v


def _flat(member: str) -> str:
    """Plain node id used for an instantiated family member."""
    return member.replace(":", "_").replace(",", "_")


@dataclass(frozen=True)
class UlmCounts:
    """u(a) for each height: explicit entries plus a count added at every finite height."""

    explicit: Mapping[Height, object]
    every_finite: object = 0

    def __getitem__(self, h: Height):
        v = self.explicit.get(h, 0)
        if h is not INF and h.is_finite():
            v = cardinal_add(v, self.every_finite)
        return v

    def support(self) -> list[Height]:
        return sorted((h for h, v in self.explicit.items() if v), key=_height_key)

    def as_dict(self, finite_horizon: int = 0) -> dict[Height, object]:
        out = {h: v for h, v in self.explicit.items() if v}
        if self.every_finite:
            for n in range(finite_horizon):
                out[Ordinal.of(n)] = self[Ordinal.of(n)]
        return out


def _height_key(h: Height):
    return (1, ()) if h is INF else (0, h.terms)


def height_key(h: Height):
    return _height_key(h)


def vp(x, p: int) -> int:
    x = Fraction(x)
    if x == 0:
        raise ValueError("valuation of zero")
    n, d, v = x.numerator, x.denominator, 0
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def chain_forest(p: int, lengths: Iterable[int]) -> Forest:
    """A forest of disjoint chains: the module sum of Z/p^n over the given n."""
    parents: dict[str, str | None] = {}
    for i, n in enumerate(lengths):
        for d in range(n):
            parents[f"c{i}_{d}"] = None if d == 0 else f"c{i}_{d - 1}"
    return Forest(p, parents)
