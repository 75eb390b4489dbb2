"""Height-preserving partial isomorphisms and the back-and-forth extension.

A :class:`PartialIso` is stored as generator pairs (x_i, y_i); the map sends
sum a_i x_i to sum a_i y_i.  Each extension adds generators so that the map
stays a well-defined, height-preserving isomorphism:

* an element with no multiple in the domain first pulls in a suitable
  multiple of a basis element on each side, matched by Ulm class and
  aligned so the two Ulm sequences agree entry by entry;
* otherwise the challenge is reached by descending through p^k a, each
  step adding a proper representative x of a coset with p x already in the
  domain.  Its image y solves p y = f(p x) and must be proper with |y| = |x|.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from . import zp
from .classify import basis_class, decide_equiv
from .forest import member_id, split_copy, with_copy
from .module_model import (
    V_MAX,
    Element,
    Frame,
    ModelError,
    ModuleDesc,
    contains,
    coset_max,
    divide,
    format_element,
    membership,
    solve_blocks,
    ulm_sequence_of,
)
from .ordinal import INF, OMEGA, Height, format_height
from .ulmseq import shift, shift_alignment

MULTIPLE_OF_BASIS = "multiple-of-basis"
CASE_1 = "torsion-case-1"
CASE_2 = "torsion-case-2"
INFINITY = "infinity-branch"
IN_DOMAIN = "in-domain"
STRATEGIES = (MULTIPLE_OF_BASIS, CASE_1, CASE_2, INFINITY, IN_DOMAIN)


class Stuck(RuntimeError):
    """No admissible image exists for a challenge (a bug on equivalent pairs)."""


class HeightViolation(AssertionError):
    pass


class NotEquivalent(ValueError):
    def __init__(self, verdict):
        super().__init__(verdict.render())
        self.verdict = verdict


@dataclass(frozen=True)
class PartialIso:
    G: ModuleDesc
    H: ModuleDesc
    pairs: tuple[tuple[Element, Element], ...] = ()
    X: tuple[str, ...] = ()  # basis labels attached on the left
    Y: tuple[str, ...] = ()
    height_bound: Height = INF

    @property
    def domain(self) -> list[Element]:
        return [x for x, _ in self.pairs]

    @property
    def image(self) -> list[Element]:
        return [y for _, y in self.pairs]

    def inverse(self) -> "PartialIso":
        return PartialIso(self.H, self.G, tuple((y, x) for x, y in self.pairs), self.Y, self.X, self.height_bound)

    def with_pair(self, x: Element, y: Element, label: tuple[str, str] | None = None) -> "PartialIso":
        X, Y = self.X, self.Y
        if label is not None:
            X, Y = X + (label[0],), Y + (label[1],)
        return replace(self, pairs=self.pairs + ((x, y),), X=X, Y=Y)

    def apply(self, s: Element) -> Element:
        coeffs = membership(self.G, self.domain, s)
        if coeffs is None:
            raise ModelError(f"{s} is outside the domain")
        return self.H.combine(zip(coeffs, self.image))

    def covered_roots(self, side: str = "left") -> set[str]:
        M = self.G if side == "left" else self.H
        labels = self.X if side == "left" else self.Y
        return {M.basis_root(n) for n in labels}


@dataclass(frozen=True)
class TraceStep:
    """One pair added to the map while answering a challenge."""

    strategy: str
    x: str
    y: str
    hx: Height
    hy: Height

    def render(self) -> str:
        return f"  step | {self.strategy} | {self.x} | {self.y} | |x|={format_height(self.hx)} |f(x)|={format_height(self.hy)}"


@dataclass(frozen=True)
class TraceRecord:
    """A challenge, its image, and the strategy that placed the challenge itself."""

    round: int
    side: str
    strategy: str
    challenge: str
    image: str
    h_challenge: Height
    h_image: Height
    steps: tuple[TraceStep, ...] = ()

    def render(self, detail: bool = False) -> str:
        line = (
            f"round {self.round} | {self.side} | {self.strategy} | {self.challenge} | {self.image} | "
            f"|x|={format_height(self.h_challenge)} |f(x)|={format_height(self.h_image)}"
        )
        if detail:
            return "\n".join([line] + [st.render() for st in self.steps])
        return line


@dataclass
class WitnessTrace:
    initial: tuple[TraceStep, ...] = ()
    records: list[TraceRecord] = field(default_factory=list)
    final: PartialIso | None = None
    maps: list[PartialIso] = field(default_factory=list)

    def render(self, detail: bool = False) -> str:
        lines = []
        if detail:
            lines.append("initial matching")
            lines.extend(st.render() for st in self.initial)
        lines.extend(r.render(detail) for r in self.records)
        return "\n".join(lines)

    def steps(self) -> list[TraceStep]:
        return list(self.initial) + [st for r in self.records for st in r.steps]

    def strategy_counts(self) -> dict[str, int]:
        out = {s: 0 for s in STRATEGIES}
        for st in self.steps():
            out[st.strategy] += 1
        return out


# -- properness and niceness ---------------------------------------------------------


def find_proper(G: ModuleDesc, S: Sequence[Element], y: Element) -> Element:
    """An element of maximal height in y + <S>."""
    if contains(G, S, y):
        raise ModelError("the coset is S itself")
    return coset_max(G, S, y)[1]


def is_proper(G: ModuleDesc, S: Sequence[Element], y: Element) -> bool:
    if contains(G, S, y):
        return False
    return coset_max(G, S, y)[0] == G.height(y)


def is_nice(G: ModuleDesc, S: Sequence[Element], probes: Iterable[Element]) -> bool:
    """Every probed coset of <S> attains a maximal height."""
    from .module_model import UnboundedCoset

    for y in probes:
        if contains(G, S, y):
            continue
        try:
            coset_max(G, S, y)
        except UnboundedCoset:
            return False
    return True


# -- socle pools -------------------------------------------------------------------


def _max_indices(elements: Iterable[Element]) -> tuple[int, int]:
    """Largest family-member index and copy index mentioned."""
    mem = cop = 0
    for x in elements:
        for g in x.support():
            base, k = split_copy(g)
            cop = max(cop, k)
            if base.startswith("fam") and ":" in base:
                mem = max(mem, int(base.split(":")[1].split(",")[0]))
    return mem, cop


def socle_pool(H: ModuleDesc, sigma: Height, context: Sequence[Element]) -> list[Element]:
    """Socle elements of height sigma spanning the layer at sigma, together
    with fresh members of families and replicated trees."""
    f = H.forest
    mem, cop = _max_indices(context)
    nodes: list[str] = []
    for v in f.explicit_nodes():
        if f.node_height(v) == sigma and f.is_excess(v):
            nodes.append(v)
    for j, fam in enumerate(f.families):
        if fam.kind == "chains" and sigma is not INF and sigma.is_finite():
            nodes.append(member_id(j, sigma.finite_part + 1, 0))
        elif fam.kind == "const" and sigma == _ord(fam.length - 1):
            members = [member_id(j, m, 0) for m in range(1, mem + 3)]
            nodes.extend([v for v in members if f.is_excess(v)][: mem + 1])
    out = []
    for v in nodes:
        copies = [0]
        if f._root_base(split_copy(v)[0]) in f.replicated:
            copies = range(cop + 2)
        for k in copies:
            out.append(H.element(f.socle_element(with_copy(v, k))))
    return out


def infinity_pool(H: ModuleDesc, context: Sequence[Element]) -> list[Element]:
    f = H.forest
    _, cop = _max_indices(context)
    out = []
    for s in f.infinite_socle():
        root = f._root_base(split_copy(next(iter(s)))[0])
        copies = range(cop + 2) if root in f.replicated else [0]
        for k in copies:
            out.append(H.element({with_copy(g, k): c for g, c in s.items()}))
    return out


def _ord(n: int):
    from .ordinal import Ordinal

    return Ordinal.of(n)


def _combinations(pool: Sequence[Element], p: int, limit: int = 4096):
    """Nonzero F_p-combinations of the pool, single members first."""
    for i in range(len(pool)):
        yield {i: 1}
    for count, coeffs in enumerate(itertools.product(range(p), repeat=len(pool))):
        if count > limit:
            return
        support = {i: c for i, c in enumerate(coeffs) if c}
        if support and not (len(support) == 1 and 1 in support.values()):
            yield support


def case2_capacity(H: ModuleDesc, T: Sequence[Element], sigma: Height) -> tuple[bool, int]:
    """Whether the layer p^s H[p] / p^(s+1) H[p] is larger than the part of it
    reached by T + p^(s+1) H, returned with the dimension of that part."""
    u = H.forest.ulm_invariants()[sigma]
    pool = socle_pool(H, sigma, T)
    if not pool:
        return (u == OMEGA or u > 0), 0
    frame = Frame(H, [*pool, *T])
    beta = sigma.plus(1) if sigma is not INF else INF
    rows, rels = frame.quotient(beta)
    index = {g: i for i, g in enumerate(rows)}
    cols = []
    for x in [*pool, *T]:
        col = [Fraction(0)] * len(rows)
        for g, c in frame.project(x, beta).items():
            col[index[g]] += c
        cols.append(col)
    for rel in rels:
        col = [Fraction(0)] * len(rows)
        for g, c in rel.items():
            col[index[g]] += c
        cols.append(col)
    ker = zp.kernel(cols, len(rows), H.p) if rows else [[Fraction(int(i == j)) for j in range(len(cols))] for i in range(len(cols))]
    d = zp.rank_mod_p([k[: len(pool)] for k in ker], H.p) if ker else 0
    if u == OMEGA:
        return True, d
    return d < u, d


# -- multiples that stay proper ------------------------------------------------------


def stable_proper_exponent(G: ModuleDesc, S: Sequence[Element], y: Element, window: int = V_MAX, bound: int = 64) -> int:
    """Least n such that p^m y is proper with respect to <S> for m = n..n+window."""
    span = set()
    for s in S:
        span.update(G.free_content(s))
    if G.is_torsion(y) or span & set(G.free_content(y)):
        raise ModelError("stable_proper_exponent needs y of infinite order, independent of S")
    ok: list[bool] = []
    n = 0
    m = 0
    while True:
        z = G.p_power(m, y)
        ok.append(coset_max(G, S, z)[0] == G.height(z) if S else True)
        if not ok[-1]:
            n = m + 1
        if m - n >= window:
            return n
        m += 1
        if m > bound + window:
            raise ModelError("stable_proper_exponent bound exhausted")


def min_rule_holds(G: ModuleDesc, S_elements: Iterable[Element], y: Element, n: int, max_v: int = 6) -> bool:
    """Direct check of |r p^n y + s| = min(|r p^n y|, |s|) over sampled r."""
    S_elements = list(S_elements)
    for v in range(max_v + 1):
        for u in range(1, G.p):
            ry = G.scale(u * G.p ** (n + v), y)
            hy = G.height(ry)
            for s in S_elements:
                hs = G.height(s)
                want = hy if hy < hs else hs
                if G.height(G.add(ry, s)) != want:
                    return False
    return True


# -- the extension step --------------------------------------------------------------


def _unused_match(f: PartialIso, name: str) -> str:
    """An unattached basis label of H in the Ulm class of G's ``name``."""
    e = basis_class(f.G, split_copy(name)[0])
    used = set(f.Y)
    for b in f.H.basis:
        if basis_class(f.H, b.name) != e:
            continue
        if b.times_omega:
            k = 0
            while with_copy(b.name, k) in used:
                k += 1
            return with_copy(b.name, k)
        if b.name not in used:
            return b.name
    raise Stuck(f"no unused basis element of H in the class of {name}")


def _attach_basis(f: PartialIso, name: str) -> tuple[PartialIso, Element, Element]:
    G, H = f.G, f.H
    partner = _unused_match(f, name)
    w, v = G.basis_vector(name), H.basis_vector(partner)
    n = stable_proper_exponent(G, f.domain, w)
    m = stable_proper_exponent(H, f.image, v)
    a = shift(ulm_sequence_of(G, w), n)
    b = shift(ulm_sequence_of(H, v), m)
    i, j = shift_alignment(a, b)
    x = G.p_power(n + i, w)
    y = H.p_power(m + j, v)
    if ulm_sequence_of(G, x) != ulm_sequence_of(H, y):
        raise Stuck(f"could not align {name} with {partner}")
    return f.with_pair(x, y, (name, partner)), x, y


def _descend_once(f: PartialIso, a: Element) -> tuple[PartialIso, str, Element, Element]:
    """Add a proper representative of a + S, assuming p a lies in S."""
    G, H = f.G, f.H
    S, T = f.domain, f.image
    sigma, x = coset_max(G, S, a)
    if sigma is INF:
        b = f.apply(G.scale(G.p, x))
        base = divide(H, b, INF)
        for y in _candidates(H, base, infinity_pool(H, [*T, base])):
            if not contains(H, T, y):
                return f.with_pair(x, y), INFINITY, x, y
        raise Stuck(f"no divisible image outside the range for {x}")
    pa = G.scale(G.p, a)
    frame = Frame(G, [a, pa, *S, *(G.scale(G.p, s) for s in S)])
    sol = solve_blocks(frame, [(sigma, a, S), (sigma.plus(2), pa, [G.scale(G.p, s) for s in S])])
    if sol is not None:
        x = G.combine([(1, a)] + [(-c, s) for c, s in zip(sol, S)])
        strategy = CASE_2
    else:
        strategy = CASE_1
    b = f.apply(G.scale(G.p, x))
    if strategy == CASE_1:
        y = divide(H, b, sigma)
        if H.height(y) != sigma or not _proper_at(H, T, y, sigma):
            raise Stuck(f"case 1 image {y} is not proper")
        return f.with_pair(x, y), strategy, x, y
    w2 = divide(H, b, sigma.plus(1))
    pool = socle_pool(H, sigma, [*T, w2])
    for y in _candidates(H, w2, pool, include_base=False):
        if H.height(y) == sigma and _proper_at(H, T, y, sigma):
            return f.with_pair(x, y), strategy, x, y
    raise Stuck(f"case 2 found no socle correction at height {format_height(sigma)}")


def _proper_at(H: ModuleDesc, T: Sequence[Element], y: Element, sigma: Height) -> bool:
    """No t in T lifts y above sigma."""
    if not T:
        return True
    frame = Frame(H, [y, *T])
    return solve_blocks(frame, [(sigma.plus(1), y, T)]) is None


def _candidates(H: ModuleDesc, base: Element, pool: Sequence[Element], include_base: bool = True):
    if include_base:
        yield base
    for combo in _combinations(pool, H.p):
        yield H.combine([(1, base)] + [(c, pool[i]) for i, c in combo.items()])


def extend_once(f: PartialIso, a: Element, side: str = "left") -> tuple[PartialIso, list[tuple[str, Element, Element]]]:
    """Extend f so that a (in G for side 'left', in H for 'right') is in its
    domain (range).  Returns the new map and (strategy, added, image) steps."""
    if side == "right":
        g, steps = extend_once(f.inverse(), a, "left")
        return g.inverse(), [(s, x, y) for s, x, y in steps]
    G = f.G
    steps: list[tuple[str, Element, Element]] = []
    covered = f.covered_roots("left")
    for root in sorted(G.free_content(a)):
        if root in covered:
            continue
        name = G.basis_for_root(root)
        f, x, y = _attach_basis(f, name)
        steps.append((MULTIPLE_OF_BASIS, x, y))
        covered.add(root)
    if contains(G, f.domain, a):
        if not steps:
            steps.append((IN_DOMAIN, a, f.apply(a)))
        return f, steps
    m = 1
    while not contains(G, f.domain, G.p_power(m, a)):
        m += 1
        if m > 256:
            raise Stuck("challenge has no multiple in the domain")
    for k in range(m - 1, -1, -1):
        ak = G.p_power(k, a)
        f, strategy, x, y = _descend_once(f, ak)
        steps.append((strategy, x, y))
    return f, steps


# -- certification -------------------------------------------------------------------


def _relations(M: ModuleDesc, gens: Sequence[Element]) -> list[list[Fraction]]:
    """A generating set of the relations sum z_i gens_i = 0 (coefficients z)."""
    frame = Frame(M, gens)
    rows, rels = frame.quotient(None)
    index = {g: i for i, g in enumerate(rows)}
    cols = []
    for x in gens:
        col = [Fraction(0)] * len(rows)
        for g, c in x.coeffs:
            col[index[g]] += c
        cols.append(col)
    for rel in rels:
        col = [Fraction(0)] * len(rows)
        for g, c in rel.items():
            col[index[g]] += c
        cols.append(col)
    return [k[: len(gens)] for k in zp.kernel(cols, len(rows), M.p)]


def check_well_defined(f: PartialIso) -> None:
    """Relations among the domain generators and among the image generators coincide."""
    if not f.pairs:
        return
    for M, N, src, dst in ((f.G, f.H, f.domain, f.image), (f.H, f.G, f.image, f.domain)):
        for z in _relations(M, src):
            if not N.combine(zip(z, dst)).is_zero():
                raise HeightViolation(f"relation {z} is not carried across")


def check_heights(f: PartialIso, rng: random.Random | None = None, samples: int = 12) -> None:
    """Heights agree on every generator pair and on sampled combinations."""
    G, H = f.G, f.H
    for x, y in f.pairs:
        if G.height(x) != H.height(y):
            raise HeightViolation(f"|{x}| = {G.height(x)} but |{y}| = {H.height(y)}")
    rng = rng or random.Random(0)
    n = len(f.pairs)
    for _ in range(samples if n > 1 else 0):
        k = rng.randint(2, min(4, n))
        idx = rng.sample(range(n), k)
        coeffs = [rng.choice([1, -1, 2, G.p, G.p + 1, G.p**2]) for _ in idx]
        x = G.combine((c, f.pairs[i][0]) for c, i in zip(coeffs, idx))
        y = H.combine((c, f.pairs[i][1]) for c, i in zip(coeffs, idx))
        if G.height(x) != H.height(y):
            raise HeightViolation(f"combination {coeffs} of {idx}: {G.height(x)} vs {H.height(y)}")


# -- games ---------------------------------------------------------------------------


def initial_matching(G: ModuleDesc, H: ModuleDesc) -> tuple[PartialIso, list[tuple[str, Element, Element]]]:
    """Attach every declared (non-copy) basis element of G to a partner in H."""
    f = PartialIso(G, H)
    steps = []
    for b in G.basis:
        f, x, y = _attach_basis(f, b.name)
        steps.append((MULTIPLE_OF_BASIS, x, y))
    return f, steps


def random_challenge(M: ModuleDesc, rng: random.Random, depth_cap: int = 4) -> Element:
    f = M.forest
    gens = list(f.explicit_nodes())
    for j, fam in enumerate(f.families):
        if fam.kind == "spine":
            gens.extend(member_id(j, 1, d) for d in range(depth_cap))
        else:
            for m in range(1, 4):
                ln = fam.member_length(m)
                gens.extend(member_id(j, m, d) for d in range(min(ln, depth_cap)))
    for r in sorted(f.replicated):
        gens.extend(with_copy(g, 1) for g in f.explicit_nodes() if f.root_of(g) == r)
    k = rng.randint(1, min(3, len(gens)))
    coeffs = {}
    for g in rng.sample(gens, k):
        c = rng.choice([1, 1, -1, 2, M.p, M.p + 1])
        coeffs[g] = coeffs.get(g, 0) + c
    x = M.element(coeffs)
    if x.is_zero():
        x = M.element({gens[0]: 1})
    return x


def run_game(
    G: ModuleDesc,
    H: ModuleDesc,
    rounds: int = 8,
    seed: int | None = 0,
    script: Iterable[tuple[str, Element]] | None = None,
    f0: PartialIso | None = None,
    check: bool = True,
    on_record=None,
) -> WitnessTrace:
    verdict = decide_equiv(G, H)
    if not verdict.equivalent:
        raise NotEquivalent(verdict)
    trace = WitnessTrace()
    rng = random.Random(seed)

    def to_steps(side, steps):
        M, N = (G, H) if side == "L" else (H, G)
        return tuple(
            TraceStep(strategy, format_element(x, M.free), format_element(y, N.free), M.height(x), N.height(y))
            for strategy, x, y in steps
        )

    def emit(rnd, side, a, steps, f):
        M, N = (G, H) if side == "L" else (H, G)
        g = f if side == "L" else f.inverse()
        b = g.apply(a)
        done = to_steps(side, steps)
        strategy = done[-1].strategy if done else "in-domain"
        rec = TraceRecord(
            rnd, side, strategy, format_element(a, M.free), format_element(b, N.free), M.height(a), N.height(b), done
        )
        trace.records.append(rec)
        trace.maps.append(f)
        if on_record:
            on_record(rec)

    if f0 is None:
        f, steps = initial_matching(G, H)
        trace.initial = to_steps("L", steps)
    else:
        f = f0
    trace.maps.append(f)
    if check:
        check_well_defined(f)
        check_heights(f, rng)
    if script is not None:
        challenges = iter(script)
    else:

        def generated():
            for r in range(1, rounds + 1):
                side = "L" if r % 2 else "R"
                yield side, random_challenge(G if side == "L" else H, rng)

        challenges = generated()
    for r, (side, a) in enumerate(challenges, 1):
        f, steps = extend_once(f, a, "left" if side == "L" else "right")
        emit(r, side, a, steps, f)
        if check:
            check_well_defined(f)
            check_heights(f, rng)
    trace.final = f
    return trace
