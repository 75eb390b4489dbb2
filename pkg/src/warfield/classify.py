"""Invariant profiles (u-hat, w-hat) and the equivalence decision."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .forest import cardinal_add, split_copy, with_copy
from .module_model import (
    Element,
    ModelError,
    ModuleDesc,
    h_zero_member,
    is_decomposition_set,
    ulm_sequence_of,
)
from .ordinal import INF, OMEGA, Height, Ordinal, format_height
from .ulmseq import UlmClass, canonical_class, class_sort_key, format_sequence


def _fmt_count(v) -> str:
    return "w" if v == OMEGA else str(v)


def _cap(v):
    return OMEGA if v == OMEGA else int(v)


def _hkey(h: Height):
    return (1, ()) if h is INF else (0, h.terms)


@dataclass(frozen=True)
class UHat:
    """alpha -> min(u(alpha), w): ``finite_default`` at finite heights not listed."""

    finite_default: object = 0
    entries: tuple[tuple[Height, object], ...] = ()

    @classmethod
    def build(cls, explicit: Mapping[Height, object], every_finite=0) -> "UHat":
        out = {}
        for h, v in explicit.items():
            if h is not INF and h.is_finite():
                v = cardinal_add(v, every_finite)
                if v != every_finite:
                    out[h] = _cap(v)
            elif v:
                out[h] = _cap(v)
        return cls(_cap(every_finite), tuple(sorted(out.items(), key=lambda kv: _hkey(kv[0]))))

    def __getitem__(self, h: Height):
        d = dict(self.entries)
        if h in d:
            return d[h]
        if h is not INF and h.is_finite():
            return self.finite_default
        return 0

    def keys(self) -> list[Height]:
        return [h for h, _ in self.entries]

    def lines(self) -> list[str]:
        out = []
        if self.finite_default:
            out.append(f"u_hat: n -> {_fmt_count(self.finite_default)} (every finite n not listed)")
        for h, v in self.entries:
            out.append(f"u_hat: {format_height(h)} -> {_fmt_count(v)}")
        return out


@dataclass(frozen=True)
class InvariantProfile:
    u_hat: UHat
    w_hat: tuple[tuple[UlmClass, object], ...] = ()

    def w_map(self) -> dict[UlmClass, object]:
        return dict(self.w_hat)

    def lines(self) -> list[str]:
        out = self.u_hat.lines()
        for e, v in self.w_hat:
            out.append(f"w_hat: {format_sequence(e.representative)} -> {_fmt_count(v)}")
        return out or ["(all invariants vanish)"]

    def render(self) -> str:
        return "\n".join(self.lines())


def basis_class(G: ModuleDesc, name: str) -> UlmClass:
    return canonical_class(ulm_sequence_of(G, G.basis_vector(name)))


def _count_classes(classes: Sequence[tuple[UlmClass, bool]]) -> tuple[tuple[UlmClass, object], ...]:
    counts: dict[UlmClass, object] = {}
    for e, omega in classes:
        counts[e] = cardinal_add(counts.get(e, 0), OMEGA if omega else 1)
    return tuple(sorted(counts.items(), key=lambda kv: class_sort_key(kv[0])))


def profile(G: ModuleDesc) -> InvariantProfile:
    u = G.forest.ulm_invariants()
    classes = [(basis_class(G, b.name), b.times_omega) for b in G.basis]
    return InvariantProfile(UHat.build(u.explicit, u.every_finite), _count_classes(classes))


@dataclass(frozen=True)
class Verdict:
    kind: str  # "equivalent" | "u_hat" | "w_hat"
    where: object = None
    left: object = None
    right: object = None

    @property
    def equivalent(self) -> bool:
        return self.kind == "equivalent"

    def render(self) -> str:
        if self.kind == "equivalent":
            return "EQUIVALENT"
        if self.kind == "u_hat":
            at = format_height(self.where)
        else:
            at = format_sequence(self.where.representative)
        return f"DISTINGUISHED {self.kind}@{at}: {_fmt_count(self.left)} vs {_fmt_count(self.right)}"


def compare_profiles(a: InvariantProfile, b: InvariantProfile) -> Verdict:
    ua, ub = a.u_hat, b.u_hat
    cands = set(ua.keys()) | set(ub.keys())
    if ua.finite_default != ub.finite_default:
        n = 0
        while Ordinal.of(n) in cands:
            n += 1
        cands.add(Ordinal.of(n))
    for h in sorted(cands, key=_hkey):
        if ua[h] != ub[h]:
            return Verdict("u_hat", h, ua[h], ub[h])
    wa, wb = a.w_map(), b.w_map()
    for e in sorted(set(wa) | set(wb), key=class_sort_key):
        if wa.get(e, 0) != wb.get(e, 0):
            return Verdict("w_hat", e, wa.get(e, 0), wb.get(e, 0))
    return Verdict("equivalent")


def decide_equiv(G: ModuleDesc, H: ModuleDesc) -> Verdict:
    if G.p != H.p:
        raise ModelError(f"modules over different primes ({G.p} vs {H.p})")
    return compare_profiles(profile(G), profile(H))


# -- partial decomposition bases ---------------------------------------------------


@dataclass(frozen=True)
class PdbDescriptor:
    """A decomposition set whose finite subsets and their multiples form a pdb.

    ``base`` lists (label, element, times_omega) triples; the label of a basis
    element of the module is its name.
    """

    G: ModuleDesc
    base: tuple[tuple[str, Element, bool], ...] = field(default=())

    @classmethod
    def declared(cls, G: ModuleDesc) -> "PdbDescriptor":
        return cls(G, tuple((b.name, G.basis_vector(b.name), b.times_omega) for b in G.basis))

    def roots(self) -> dict[str, str]:
        out = {}
        for label, x, _ in self.base:
            (root,) = self.G.free_content(x)
            out[root] = label
        return out

    def element(self, label: str) -> Element:
        base, k = split_copy(label)
        for name, x, omega in self.base:
            if name == base:
                if not k:
                    return x
                if not omega:
                    break
                return self.G.element({with_copy(g, k): c for g, c in x.coeffs})
        raise ModelError(f"pdb has no element {label!r}")

    def cover(self, X: Sequence[Element], request: Element) -> list[Element]:
        covered = set()
        for x in X:
            covered.update(self.G.free_content(x))
        roots = self.roots()
        out = list(X)
        for g in sorted(self.G.free_content(request)):
            if g in covered:
                continue
            base, k = split_copy(g)
            out.append(self.element(with_copy(roots[base], k)))
            covered.add(g)
        return out

    def validate(self) -> tuple[bool, str]:
        sample = [x for _, x, _ in self.base]
        sample += [self.element(f"{label}#1") for label, _, omega in self.base if omega]
        return is_decomposition_set(self.G, sample)


def w_hat_from_pdb(B: PdbDescriptor) -> dict[UlmClass, object]:
    classes = [(canonical_class(ulm_sequence_of(B.G, x)), omega) for _, x, omega in B.base]
    return dict(_count_classes(classes))


def w_hat_bounded_max(B: PdbDescriptor, multipliers: Sequence[int] | None = None) -> dict[UlmClass, object]:
    """Maximize class counts directly over subsets of multiples of the base;
    a times-omega entry stands for unboundedly many members."""
    G = B.G
    mults = multipliers or (1, G.p, G.p**2 + 1)
    best: dict[UlmClass, object] = {}
    n = len(B.base)
    for mask in range(1, 2**n):
        chosen = [B.base[i] for i in range(n) if mask >> i & 1]
        for rs in itertools.product(mults, repeat=len(chosen)):
            counts: dict[UlmClass, object] = {}
            for (_, x, omega), r in zip(chosen, rs):
                e = canonical_class(ulm_sequence_of(G, G.scale(r, x)))
                counts[e] = cardinal_add(counts.get(e, 0), OMEGA if omega else 1)
            for e, c in counts.items():
                old = best.get(e, 0)
                if old != OMEGA and (c == OMEGA or c > old):
                    best[e] = c
    return best


def align_bases(
    A: PdbDescriptor, B: PdbDescriptor, X: Sequence[Element], Y: Sequence[Element], max_rounds: int | None = None
) -> tuple[list[Element], list[Element], int]:
    """Close X over Y (in A) and Y over X (in B) until <X>^0 = <Y>^0."""
    G = A.G
    bound = (max_rounds if max_rounds is not None else G.rank() + 1) + 1
    X, Y = list(X), list(Y)
    for rounds in range(bound + 1):
        X2 = X
        for y in Y:
            X2 = A.cover(X2, y)
        Y2 = Y
        for x in X2:
            Y2 = B.cover(Y2, x)
        if len(X2) == len(X) and len(Y2) == len(Y):
            for y in Y:
                if not h_zero_member(G, X, y)[0]:
                    raise ModelError("aligned sets disagree on a generator")
            for x in X:
                if not h_zero_member(G, Y, x)[0]:
                    raise ModelError("aligned sets disagree on a generator")
            return X, Y, rounds
        X, Y = X2, Y2
    raise ModelError("alignment did not stabilize within the rank bound")
