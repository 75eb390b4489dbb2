"""Mixed p-local modules: a forest with free roots plus a decomposition basis.

Elements are kept in forest normal form, so equality is structural and the
height of an element is read off its support.  Questions about a finitely
generated submodule S (membership, the largest height in a coset y + S,
solving for preimages) are answered exactly by linear algebra over Z_(p) in
the submodule spanned by an ancestor-closed set of generators; see
:class:`Frame`.
"""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import zp
from .forest import Forest, ForestError, split_copy, vp, with_copy
from .ordinal import INF, OMEGA, ZERO, Height, Ordinal, min_height
from .ulmseq import InfTail, SuccTail, UlmSequence, is_admissible, normalize

V_MAX = 8
FREE_SCAN = 24  # multiples of a free root examined when maximizing a height


class ModelError(ValueError):
    pass


class DivisionUnsupported(ModelError):
    pass


class UnboundedCoset(ModelError):
    """Heights in a coset climb past every scanned level without reaching inf."""


@dataclass(frozen=True)
class Element:
    """An element in normal form: node digits and p-local free-root coefficients."""

    coeffs: tuple[tuple[str, Fraction], ...] = ()

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def support(self) -> list[str]:
        return [g for g, _ in self.coeffs]

    def __str__(self) -> str:
        return format_element(self)


def format_element(x: Element, free: Iterable[str] = ()) -> str:
    """Expression syntax: free roots by name, forest nodes as ``t(id)``."""
    if x.is_zero():
        return "0"
    free = set(free)
    out = []
    for g, c in x.coeffs:
        body = g if split_copy(g)[0] in free else f"t({g})"
        if c == 1:
            term = body
        elif c == -1:
            term = f"-{body}"
        elif c.denominator == 1:
            term = f"{c.numerator}*{body}"
        else:
            term = f"({c})*{body}"
        out.append(term)
    return " + ".join(out).replace("+ -", "- ")


@dataclass(frozen=True)
class BasisTerm:
    gen: str
    p_power: int = 0
    unit: int = 1


@dataclass(frozen=True)
class BasisElement:
    """sum of unit * p^k * gen over ``terms`` plus a forest part."""

    name: str
    terms: tuple[BasisTerm, ...] = ()
    torsion: tuple[tuple[str, int], ...] = ()
    times_omega: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        tors = self.torsion.items() if isinstance(self.torsion, Mapping) else self.torsion
        object.__setattr__(self, "torsion", tuple(sorted((g, int(c)) for g, c in tors)))

    def coefficients(self, p: int, copy: int = 0) -> dict[str, Fraction]:
        out: dict[str, Fraction] = {}
        for t in self.terms:
            if t.unit % p == 0:
                raise ModelError(f"unit {t.unit} of {self.name} is divisible by p")
            g = with_copy(t.gen, copy)
            out[g] = out.get(g, Fraction(0)) + Fraction(t.unit * p**t.p_power)
        for g, c in self.torsion:
            g = with_copy(g, copy)
            out[g] = out.get(g, Fraction(0)) + c
        return out


@dataclass(frozen=True)
class ModuleDesc:
    forest: Forest
    basis: tuple[BasisElement, ...] = ()
    _roots: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        names = [b.name for b in self.basis]
        if len(set(names)) != len(names) or any("#" in n for n in names):
            raise ModelError("basis names must be distinct and free of '#'")
        f = self.forest
        replicated = set()
        touched: dict[str, str] = {}
        roots: dict[str, str] = {}
        for b in self.basis:
            coeffs = b.coefficients(f.p)
            trees = set()
            for g in coeffs:
                if not f.exists(g) or "#" in g:
                    raise ModelError(f"basis element {b.name} mentions unknown generator {g!r}")
                trees.add(f.root_of(g))
            content = f.free_content(coeffs)
            if len(content) != 1:
                raise ModelError(f"basis element {b.name} must involve exactly one free root")
            (root,) = content
            if root in roots.values():
                raise ModelError(f"free root {root} is shared by two basis elements")
            roots[b.name] = root
            for r in trees:
                if r in touched and (b.times_omega or touched[r] != "plain"):
                    raise ModelError(f"tree {r} of a times-omega element is shared")
                touched[r] = "omega" if b.times_omega else "plain"
            if b.times_omega:
                replicated |= trees
        replicated |= set(f.replicated)
        if replicated != set(f.replicated):
            object.__setattr__(self, "forest", dataclasses.replace(f, replicated=frozenset(replicated)))
        object.__setattr__(self, "_roots", roots)

    # -- basic data ------------------------------------------------------------
    @property
    def p(self) -> int:
        return self.forest.p

    @property
    def free(self) -> tuple[str, ...]:
        return self.forest.free

    def rank(self) -> int:
        return len(self.free)

    def basis_by_name(self, name: str) -> BasisElement:
        base, _ = split_copy(name)
        for b in self.basis:
            if b.name == base:
                return b
        raise ModelError(f"no basis element {name!r}")

    def basis_root(self, name: str) -> str:
        base, k = split_copy(name)
        self.basis_by_name(base)
        return with_copy(self._roots[base], k)

    def basis_for_root(self, root: str) -> str:
        base, k = split_copy(root)
        for name, r in self._roots.items():
            if r == base:
                if k and not self.basis_by_name(name).times_omega:
                    break
                return with_copy(name, k)
        raise ModelError(f"free root {root!r} is not covered by the basis")

    def basis_vector(self, name: str) -> Element:
        base, k = split_copy(name)
        b = self.basis_by_name(base)
        if k and not b.times_omega:
            raise ModelError(f"{base} has no copies")
        return self.element(b.coefficients(self.p, k))

    # -- arithmetic ------------------------------------------------------------
    def element(self, coeffs: Mapping[str, object]) -> Element:
        for g in coeffs:
            if not self.forest.exists(g):
                raise ModelError(f"unknown generator {g!r}")
        digits, free = self.forest.normal_form(coeffs)
        merged = {g: Fraction(d) for g, d in digits.items()}
        merged.update(free)
        return Element(tuple(sorted(merged.items())))

    def zero(self) -> Element:
        return Element()

    def combine(self, pairs: Iterable[tuple[object, Element]]) -> Element:
        acc: dict[str, Fraction] = {}
        for r, x in pairs:
            r = Fraction(r)
            if not r:
                continue
            for g, c in x.coeffs:
                acc[g] = acc.get(g, Fraction(0)) + r * c
        return self.element(acc)

    def add(self, *xs: Element) -> Element:
        return self.combine((1, x) for x in xs)

    def sub(self, x: Element, y: Element) -> Element:
        return self.combine([(1, x), (-1, y)])

    def scale(self, r, x: Element) -> Element:
        return self.combine([(r, x)])

    def p_power(self, k: int, x: Element) -> Element:
        return self.scale(self.p**k, x)

    # -- heights -----------------------------------------------------------------
    def height(self, x: Element) -> Height:
        f = self.forest
        parts = []
        for g, c in x.coeffs:
            h = f.node_height(g)
            parts.append(h.plus(vp(c, self.p)) if f.is_free_root(g) else h)
        return min_height(parts)

    def free_content(self, x: Element) -> dict[str, Fraction]:
        return self.forest.free_content(x.as_dict())

    def is_torsion(self, x: Element) -> bool:
        return not self.free_content(x)

    def order_exponent(self, x: Element) -> int:
        """Least k with p^k x = 0 (x torsion)."""
        if not self.is_torsion(x):
            raise ModelError("element has infinite order")
        k = 0
        while not x.is_zero():
            x = self.scale(self.p, x)
            k += 1
        return k


# -- exact linear algebra in a finitely generated piece ---------------------------


class Frame:
    """Coordinates on the submodule M_C spanned by an ancestor-closed set C.

    ``p^b G`` meets M_C in the span of the nodes of height >= b together with
    the multiples of free roots that reach height b, so the quotient
    M_C / (p^b G cap M_C) is presented on the nodes of height < b.  Passing
    ``beta=None`` gives M_C itself.
    """

    def __init__(self, G: ModuleDesc, elements: Iterable[Element], extra: Iterable[str] = ()):
        self.G = G
        f = G.forest
        gens: set[str] = set()
        todo = [g for x in elements for g in x.support()] + list(extra)
        while todo:
            g = todo.pop()
            if g in gens:
                continue
            gens.add(g)
            w = f.parent(g)
            if w is not None:
                todo.append(w)
        self.gens = sorted(gens)
        self.h = {g: f.node_height(g) for g in self.gens}
        self.parent = {g: f.parent(g) for g in self.gens}
        self.free = {g for g in self.gens if f.is_free_root(g)}
        self._cache: dict = {}

    def _low(self, g: str, beta) -> bool:
        return beta is None or self.h[g] < beta

    def quotient(self, beta):
        """(row generators, relation columns) presenting M_C / V_beta."""
        if beta in self._cache:
            return self._cache[beta]
        p = self.G.p
        rows = [g for g in self.gens if self._low(g, beta)]
        rels: list[dict[str, Fraction]] = []
        for g in rows:
            if g in self.free:
                if beta is None or beta is INF:
                    continue
                hg = self.h[g]
                if beta.limit_part == hg.limit_part:
                    rels.append({g: Fraction(p ** (beta.finite_part - hg.finite_part))})
                continue
            col = {g: Fraction(p)}
            w = self.parent[g]
            if w is not None and self._low(w, beta):
                col[w] = Fraction(-1)
            rels.append(col)
        self._cache[beta] = (rows, rels)
        return rows, rels

    def project(self, x: Element, beta) -> dict[str, Fraction]:
        return {g: c for g, c in x.coeffs if self._low(g, beta)}

    def candidate_heights(self) -> list[Height]:
        hs = {self.h[g] for g in self.gens if g not in self.free}
        for g in self.free:
            hs.update(self.h[g].plus(k) for k in range(FREE_SCAN + 1))
        hs.add(INF)
        return sorted(hs, key=_hkey)


def _hkey(h: Height):
    return (1, ()) if h is INF else (0, h.terms)


def solve_blocks(frame: Frame, blocks: Sequence[tuple[object, Element, Sequence[Element]]]):
    """Coefficients a with target_b - sum a_i gens_b[i] in V_beta_b for every
    block b = (beta_b, target_b, gens_b); the gens lists share the unknowns."""
    n_shared = len(blocks[0][2])
    row_index: dict[tuple[int, str], int] = {}
    for bi, (beta, _, _) in enumerate(blocks):
        rows, _ = frame.quotient(beta)
        for g in rows:
            row_index[(bi, g)] = len(row_index)
    n_rows = len(row_index)
    if n_rows == 0:
        return [Fraction(0)] * n_shared
    columns: list[list[Fraction]] = []
    for i in range(n_shared):
        col = [Fraction(0)] * n_rows
        for bi, (beta, _, gens) in enumerate(blocks):
            for g, c in frame.project(gens[i], beta).items():
                col[row_index[(bi, g)]] += c
        columns.append(col)
    for bi, (beta, _, _) in enumerate(blocks):
        _, rels = frame.quotient(beta)
        for rel in rels:
            col = [Fraction(0)] * n_rows
            for g, c in rel.items():
                col[row_index[(bi, g)]] += c
            columns.append(col)
    target = [Fraction(0)] * n_rows
    for bi, (beta, y, _) in enumerate(blocks):
        for g, c in frame.project(y, beta).items():
            target[row_index[(bi, g)]] += c
    if not any(target):
        return [Fraction(0)] * n_shared
    sol = zp.solve(columns, target, frame.G.p)
    return None if sol is None else sol[:n_shared]


def membership(G: ModuleDesc, gens: Sequence[Element], y: Element):
    """Z_(p) coefficients expressing y in the span of gens, or None."""
    if y.is_zero():
        return [Fraction(0)] * len(gens)
    if not gens:
        return None
    frame = Frame(G, [y, *gens])
    return solve_blocks(frame, [(None, y, gens)])


def contains(G: ModuleDesc, gens: Sequence[Element], y: Element) -> bool:
    return membership(G, gens, y) is not None


def coset_max(G: ModuleDesc, gens: Sequence[Element], y: Element) -> tuple[Height, Element]:
    """The largest height in y + <gens> with an element attaining it."""
    frame = Frame(G, [y, *gens])
    base = G.height(y)
    cands = [h for h in frame.candidate_heights() if not h < base]
    if base not in cands:
        cands.insert(0, base)

    def attempt(beta):
        return solve_blocks(frame, [(beta, y, gens)])

    lo, hi = 0, len(cands)  # cands[lo] is attained, cands[hi] is not (or off the end)
    best = [Fraction(0)] * len(gens)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        sol = attempt(cands[mid])
        if sol is not None:
            lo, best = mid, sol
        else:
            hi = mid
    beta = cands[lo]
    if beta is not INF and any(beta == frame.h[g].plus(FREE_SCAN) for g in frame.free):
        raise UnboundedCoset(f"heights in the coset of {y} reach {beta} without a maximum")
    witness = G.combine([(1, y)] + [(-a, s) for a, s in zip(best, gens)])
    actual = G.height(witness)
    assert actual == beta, (actual, beta)
    return actual, witness


def is_proper(G: ModuleDesc, gens: Sequence[Element], y: Element) -> bool:
    if contains(G, gens, y):
        return False
    return coset_max(G, gens, y)[0] == G.height(y)


def divide(G: ModuleDesc, t: Element, sigma: Height) -> Element:
    """Some z with p z = t and |z| >= sigma, given |t| >= sigma + 1."""
    f = G.forest
    p = G.p
    out: dict[str, Fraction] = {}
    for g, c in t.coeffs:
        if f.is_free_root(g):
            if vp(c, p) >= 1 and not (G.height(Element(((g, c / p),))) < sigma):
                out[g] = out.get(g, Fraction(0)) + c / p
                continue
        try:
            child = f.child_of_height_at_least(g, sigma)
        except ForestError as exc:
            raise DivisionUnsupported(str(exc)) from exc
        out[child] = out.get(child, Fraction(0)) + c
    z = G.element(out)
    if G.scale(p, z) != t:
        raise DivisionUnsupported(f"no division of {t} at height {sigma}")
    return z


# -- Ulm sequences -------------------------------------------------------------


def ulm_sequence_of(G: ModuleDesc, x: Element) -> UlmSequence:
    if G.is_torsion(x):
        raise ModelError("Ulm sequences are only taken for elements of infinite order")
    f = G.forest
    prefix: list[Height] = []
    y = x
    while any(not f.is_free_root(g) for g in y.support()):
        prefix.append(G.height(y))
        y = G.scale(G.p, y)
        if len(prefix) > 512:
            raise ModelError("element never reaches the free roots")
    base = G.height(y)
    return normalize(UlmSequence(tuple(prefix), SuccTail(base)))


def length_of(G: ModuleDesc) -> Height:
    return G.forest.length()


# -- decomposition sets ------------------------------------------------------------


def _q_rank(vectors: list[dict[str, Fraction]]) -> int:
    keys = sorted({k for v in vectors for k in v})
    rows = [[Fraction(v.get(k, 0)) for k in keys] for v in vectors]
    rank = 0
    for c in range(len(keys)):
        piv = next((i for i in range(rank, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][c]:
                fct = rows[i][c] / rows[rank][c]
                rows[i] = [a - fct * b for a, b in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def is_decomposition_set(G: ModuleDesc, X: Sequence[Element], units: Sequence[int] = (1,)) -> tuple[bool, str]:
    if not X:
        return True, "empty"
    contents = [G.free_content(x) for x in X]
    if any(not c for c in contents):
        return False, "contains a torsion element"
    if _q_rank(contents) < len(X):
        return False, "not independent"
    f = G.forest
    trees = [{f.root_of(g) for g in x.support()} for x in X]
    if all(a.isdisjoint(b) for a, b in itertools.combinations(trees, 2)):
        return True, "direct-sum supports"
    choices = [None] + list(range(V_MAX + 1))
    for pattern in itertools.product(choices, repeat=len(X)):
        if all(v is None for v in pattern):
            continue
        for us in itertools.product(units, repeat=len(X)):
            terms = [(u * G.p**v, x) for v, u, x in zip(pattern, us, X) if v is not None]
            lhs = G.height(G.combine(terms))
            rhs = min_height(G.height(G.scale(r, x)) for r, x in terms)
            if lhs != rhs:
                return False, f"min-rule fails at valuations {pattern}"
    return True, f"valuation patterns up to {V_MAX}"


def h_zero_member(G: ModuleDesc, gens: Sequence[Element], x: Element, limit: int = 256) -> tuple[bool, int | None]:
    """Whether some nonzero multiple of x lies in <gens>; the witness is a power of p."""
    if G.is_torsion(x):
        return True, G.p ** G.order_exponent(x)
    fx = G.free_content(x)
    span = [G.free_content(s) for s in gens]
    if _q_rank(span + [fx]) > _q_rank(span):
        return False, None
    k = 1
    while not contains(G, gens, G.p_power(k, x)):
        k *= 2
        if k > limit:
            raise ModelError("multiplier search exceeded its bound")
    lo, hi = k // 2, k
    if contains(G, gens, x):
        return True, 1
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if contains(G, gens, G.p_power(mid, x)):
            hi = mid
        else:
            lo = mid
    return True, G.p**hi


def close_pdb(G: ModuleDesc, X: Sequence[Element], request: Element) -> list[Element]:
    """X enlarged by the basis elements needed to put request in <X>^0."""
    covered = set()
    for x in X:
        covered.update(G.free_content(x))
    out = list(X)
    for g in sorted(G.free_content(request)):
        if g not in covered:
            out.append(G.basis_vector(G.basis_for_root(g)))
            covered.add(g)
    return out


def validate_pdb(G: ModuleDesc) -> tuple[bool, list[str]]:
    problems = []
    covered = {G.basis_root(b.name) for b in G.basis}
    for g in G.free:
        if g not in covered:
            problems.append(f"free root {g} is not covered by the basis")
    sample = [G.basis_vector(b.name) for b in G.basis]
    sample += [G.basis_vector(f"{b.name}#1") for b in G.basis if b.times_omega]
    ok, why = is_decomposition_set(G, sample)
    if not ok:
        problems.append(f"basis is not a decomposition set ({why})")
    return not problems, problems


# -- realization ---------------------------------------------------------------


def _raise_height(parents: dict, families: list, node: str, target: Ordinal, fresh) -> None:
    """Hang a gadget below ``node`` whose top has height target - 1 (or a family
    giving height target directly when target is a limit)."""
    if target == ZERO:
        return
    if target.is_limit():
        if target != OMEGA:
            raise ModelError(f"heights with limit part {target} are not realizable here")
        families.append((node, "chains"))
        return
    child = fresh()
    parents[child] = node
    _raise_height(parents, families, child, target.predecessor(), fresh)


def realize_sequence(u: UlmSequence, p: int) -> tuple[ModuleDesc, BasisElement]:
    """A module with a basis element whose Ulm sequence is exactly u."""
    from .forest import Family

    if not is_admissible(u) or isinstance(u.tail, InfTail):
        raise ModelError("need an admissible sequence with a successor tail")
    u = normalize(u)
    prefix = list(u.prefix)
    base = u.tail.base
    if base.limit_part > OMEGA or any(h.limit_part > OMEGA for h in prefix):
        raise ModelError("entries beyond w + n are not realizable here")
    parents: dict[str, str | None] = {}
    families: list[tuple[str, str]] = []
    counter = itertools.count()

    def fresh():
        return f"t{next(counter)}"

    n = len(prefix)
    chain = [f"x{i}" for i in range(n)]
    for i, v in enumerate(chain):
        parents[v] = "a" if i == n - 1 else chain[i + 1]
    for i, v in enumerate(chain):
        natural = ZERO if i == 0 else prefix[i - 1].plus(1)
        if natural < prefix[i]:
            _raise_height(parents, families, v, prefix[i], fresh)
    natural = ZERO if n == 0 else prefix[-1].plus(1)
    if natural < base:
        _raise_height(parents, families, "a", base, fresh)
    forest = Forest(p, parents, ("a",), tuple(Family(a, k) for a, k in families))
    if n:
        w = BasisElement("w", (), {chain[0]: 1})
    else:
        w = BasisElement("w", (BasisTerm("a"),))
    return ModuleDesc(forest, (w,)), w
