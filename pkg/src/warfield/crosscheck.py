"""Comparison of the symbolic machinery against the finite oracle.

Modules with families, replicated trees or free roots are first cut down to a
finite torsion forest: families and copies are instantiated at a truncation N
and every free root g is capped by a chain of N ancestors, so g gets finite
order.  Heights below N are unaffected by the cut, so agreement is checked
with both sides capped at N - 1.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .classify import decide_equiv, profile
from .forest import Forest, split_copy
from .module_model import Element, ModelError, ModuleDesc
from .oracle import (
    ORDER_CAP,
    FiniteModule,
    brute_height,
    brute_iso,
    brute_ulm,
    coordinate_height,
    exponent_ulm,
    realize_finite,
    vector_of,
)
from .ordinal import INF, OMEGA, Height, Ordinal, format_height

DEFAULT_TRUNCATION = 6


@dataclass
class CheckReport:
    lines: list[str] = field(default_factory=list)
    ok: bool = True

    def passed(self, what: str, detail: str = ""):
        self.lines.append(f"{what}: pass" + (f" ({detail})" if detail else ""))

    def failed(self, what: str, detail: str):
        self.ok = False
        self.lines.append(f"{what}: FAIL {detail}")

    def skipped(self, what: str, detail: str):
        self.lines.append(f"{what}: skipped ({detail})")

    def render(self) -> str:
        return "\n".join(self.lines + ["PASS" if self.ok else "FAIL"])


def flat_id(gen: str) -> str:
    """Name of a symbolic generator inside ``Forest.instantiate``."""
    base, k = split_copy(gen)
    base = base.replace(":", "_").replace(",", "_")
    return f"{base}_c{k}" if k else base


def truncated_forest(G: ModuleDesc, N: int) -> Forest:
    f = G.forest
    inst = f.instantiate(N) if not f.is_finite() else f
    parents = dict(inst.parents)
    for g in inst.free:
        chain = [f"{g}_up{i}" for i in range(1, N + 1)]
        parents[g] = chain[0]
        for i, v in enumerate(chain):
            parents[v] = chain[i + 1] if i + 1 < N else None
    return Forest(G.p, parents)


@dataclass
class Truncation:
    G: ModuleDesc
    N: int
    M: FiniteModule
    images: dict

    @classmethod
    def build(cls, G: ModuleDesc, N: int) -> "Truncation":
        forest = truncated_forest(G, N)
        M, images = realize_finite(forest, cap=None)
        return cls(G, N, M, images)

    def vector(self, x: Element):
        mod = self.G.p ** (sum(self.M.exponents) + 1)
        coeffs = {}
        for g, c in x.coeffs:
            c = Fraction(c)
            coeffs[flat_id(g)] = c.numerator * pow(c.denominator, -1, mod)
        return vector_of(self.images, self.M, coeffs)

    def height(self, x: Element) -> Height:
        v = self.vector(x)
        if self.M.order <= ORDER_CAP:
            return brute_height(self.M, v)
        return coordinate_height(self.M, v)


def _cap(h: Height, bound: int) -> int:
    if h is INF or not h.is_finite():
        return bound
    return min(h.finite_part, bound)


def sample_elements(G: ModuleDesc, rng: random.Random, limit: int = 1500) -> list[Element]:
    """Every digit vector on the explicit torsion nodes when that is small,
    otherwise a random sample; free roots get coefficients of valuation <= 2."""
    f = G.forest
    nodes = sorted(f.parents)
    nodes += [m for j, fam in enumerate(f.families) for m in _members(f, j)]
    p = G.p
    free_coeffs = [0, 1, -1, p, p + 1, p * p]
    out = []
    if f.is_finite() and p ** len(nodes) <= limit:
        for digits in itertools.product(range(p), repeat=len(nodes)):
            out.append(G.element(dict(zip(nodes, digits))))
        return out
    for _ in range(limit):
        coeffs = {v: rng.randrange(p) for v in nodes if rng.random() < 0.5}
        for g in f.free:
            c = rng.choice(free_coeffs)
            if c:
                coeffs[g] = c
        out.append(G.element(coeffs))
    return out


def _members(f: Forest, j: int) -> list[str]:
    fam = f.families[j]
    if fam.kind == "spine":
        # a spine is cut to a chain of length N, whose depth-d node has height N-1-d
        return [f"fam{j}:1,0"]
    out = []
    for m in (1, 2):
        n = fam.member_length(m)
        out.extend(f"fam{j}:{m},{d}" for d in range(min(n, 2)))
    return out


def check_heights(G: ModuleDesc, N: int, report: CheckReport, rng: random.Random | None = None, elements=None):
    T = Truncation.build(G, N)
    bound = N - 1
    xs = elements if elements is not None else sample_elements(G, rng or random.Random(0))
    for x in xs:
        hs, hb = G.height(x), T.height(x)
        if G.forest.is_finite():
            agree = hs == hb
        else:
            agree = _cap(hs, bound) == _cap(hb, bound)
        if not agree:
            report.failed("heights", f"first disagreement at {x}: symbolic {format_height(hs)} vs oracle {format_height(hb)}")
            return
    report.passed("heights", f"{len(xs)} elements")


def check_ulm(G: ModuleDesc, N: int, report: CheckReport, invariants=None):
    """Compare symbolic Ulm counts with the oracle at finite heights below N - 1."""
    counts = invariants if invariants is not None else G.forest.ulm_invariants()
    T = Truncation.build(G, N)
    if G.forest.is_finite() and T.M.order <= ORDER_CAP:
        brute = brute_ulm(T.M)
    else:
        brute = exponent_ulm(T.M)
    horizon = max([k + 1 for k in brute] + [0]) if G.forest.is_finite() else N - 1
    for k in range(horizon):
        s = counts[Ordinal.of(k)]
        b = brute.get(k, 0)
        # an w count comes from N instantiated members, one of which may be a main child
        ok = b >= N - 1 if s == OMEGA else s == b
        if not ok:
            shown = "w" if s == OMEGA else s
            report.failed("ulm", f"first disagreement at {k}: symbolic {shown} vs oracle {b}")
            return
    if G.forest.is_finite():
        extra = [h for h in counts.support() if h is INF or not h.is_finite()]
        if extra:
            report.failed("ulm", f"finite module has symbolic count at {format_height(extra[0])}")
            return
    report.passed("ulm", f"heights 0..{horizon - 1}")


def check_equivalence(G: ModuleDesc, report: CheckReport, rng: random.Random):
    """decide_equiv against brute isomorphism for finite torsion partners."""
    from .corpus import canonical_module, inequivalent_partner

    if not G.forest.is_finite() or G.basis:
        report.skipped("equivalence", "needs a finite torsion module")
        return
    partners = [canonical_module(profile(G), G.p)]
    for _ in range(20):
        try:
            K = inequivalent_partner(G, rng)
        except ModelError:
            continue
        if K.forest.is_finite():
            partners.append(K)
            break
    M, _ = realize_finite(G.forest, cap=None)
    for K in partners:
        verdict = decide_equiv(G, K).equivalent
        N2, _ = realize_finite(K.forest, cap=None)
        if verdict != brute_iso(M, N2):
            report.failed("equivalence", f"decide_equiv says {verdict} but brute isomorphism disagrees")
            return
    report.passed("equivalence", f"{len(partners)} partners")


def oracle_check(G: ModuleDesc, N: int = DEFAULT_TRUNCATION, seed: int = 0) -> CheckReport:
    rng = random.Random(seed)
    report = CheckReport()
    if N < 2:
        raise ModelError("truncation must be at least 2")
    check_heights(G, N, report, rng)
    check_ulm(G, N, report)
    check_equivalence(G, report, rng)
    return report
