"""Random module descriptions and equivalent / inequivalent partners.

Everything is driven by an explicit ``random.Random`` so a seed fixes the
corpus.  Equivalent partners are built either by renaming and re-choosing the
basis, or by rebuilding a module from its invariant profile alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .classify import InvariantProfile, UHat, compare_profiles, profile
from .forest import Family, Forest
from .module_model import BasisElement, BasisTerm, ModelError, ModuleDesc, realize_sequence
from .ordinal import INF, OMEGA, ZERO, Ordinal
from .ulmseq import InfTail, SuccTail, UlmSequence, normalize


@dataclass(frozen=True)
class CorpusConfig:
    max_nodes: int = 8
    max_free: int = 3
    max_gaps: int = 3
    family_prob: float = 0.3
    omega_prob: float = 0.15
    primes: tuple[int, ...] = (2, 3)


DEFAULT = CorpusConfig()


def random_parents(rng: random.Random, n: int, prefix: str = "n") -> dict[str, str | None]:
    parents: dict[str, str | None] = {}
    names = [f"{prefix}{i}" for i in range(n)]
    for i, v in enumerate(names):
        if i == 0 or rng.random() < 0.3:
            parents[v] = None
        else:
            parents[v] = names[rng.randrange(i)]
    return parents


def random_finite_forest(rng: random.Random, p: int | None = None, max_nodes: int = 8) -> Forest:
    p = p or rng.choice(DEFAULT.primes)
    return Forest(p, random_parents(rng, rng.randint(1, max_nodes)))


def random_sequence(rng: random.Random, max_gaps: int = 3, allow_omega: bool = True, min_gaps: int = 0) -> UlmSequence:
    """An admissible sequence with a successor tail, entries below w.2."""
    gaps = rng.randint(min_gaps, max_gaps)
    h = Ordinal.of(rng.randint(0, 2))
    if allow_omega and rng.random() < 0.15:
        h = OMEGA
    prefix = [h]
    steps = rng.randint(0, 3) + gaps
    for i in range(steps):
        if gaps and (rng.random() < 0.6 or steps - i == gaps):
            gaps -= 1
            if allow_omega and h.is_finite() and rng.random() < 0.25:
                h = OMEGA.plus(rng.randint(0, 1))
            else:
                h = h.plus(rng.randint(2, 3))
        else:
            h = h.plus(1)
        prefix.append(h)
    base = prefix.pop()
    return normalize(UlmSequence(tuple(prefix), SuccTail(base)))


def gap_count(u: UlmSequence) -> int:
    seq = list(u.prefix) + [u.tail.base]
    return sum(1 for a, b in zip(seq, seq[1:]) if b != a.plus(1))


class _Builder:
    def __init__(self, p: int):
        self.p = p
        self.parents: dict[str, str | None] = {}
        self.free: list[str] = []
        self.families: list[Family] = []
        self.basis: list[BasisElement] = []
        self.replicated: set[str] = set()

    def graft(self, forest: Forest, prefix: str) -> dict[str, str]:
        rename = {v: prefix + v for v in forest.explicit_nodes()}
        for v, w in forest.parents.items():
            self.parents[rename[v]] = None if w is None else rename[w]
        for g in forest.free:
            self.free.append(rename[g])
        for fam in forest.families:
            attach = None if fam.attach is None else rename[fam.attach]
            self.families.append(Family(attach, fam.kind, fam.length))
        return rename

    def module(self) -> ModuleDesc:
        forest = Forest(self.p, self.parents, tuple(self.free), tuple(self.families), frozenset(self.replicated))
        return ModuleDesc(forest, tuple(self.basis))

    def node_count(self) -> int:
        return len(self.parents)


def _torsion_part(b: _Builder, rng: random.Random, cfg: CorpusConfig, budget: int, families: bool):
    n = rng.randint(0, budget)
    if n:
        b.graft(Forest(b.p, random_parents(rng, n, "n")), "")
    if not families:
        return
    nodes = list(b.parents)
    while rng.random() < cfg.family_prob:
        kind = rng.choice(["chains", "const", "spine"])
        if kind == "spine":
            if not nodes:
                continue
            b.families.append(Family(rng.choice(nodes), "spine"))
        elif kind == "const":
            attach = rng.choice(nodes + [None]) if nodes else None
            b.families.append(Family(attach, "const", rng.randint(1, 3)))
        else:
            attach = rng.choice(nodes + [None]) if nodes else None
            b.families.append(Family(attach, "chains"))


def random_module(rng: random.Random, kind: str = "mixed", cfg: CorpusConfig = DEFAULT, p: int | None = None) -> ModuleDesc:
    """kind: 'torsion' (finite forest), 'torsion-families', 'mixed' or 'gappy'."""
    p = p or rng.choice(cfg.primes)
    for _ in range(200):
        b = _Builder(p)
        if kind == "torsion":
            b.graft(random_finite_forest(rng, p, cfg.max_nodes), "")
            return b.module()
        if kind == "torsion-families":
            _torsion_part(b, rng, cfg, cfg.max_nodes, True)
            if not b.parents and not b.families:
                continue
            return b.module()
        n_free = rng.randint(1, cfg.max_free)
        styles = [rng.choice(["plain", "shifted", "gapped"]) for _ in range(n_free)]
        if kind == "gappy" and "gapped" not in styles:
            styles[0] = "gapped"
        _torsion_part(b, rng, cfg, rng.randint(0, 3), True)
        for i, style in enumerate(styles):
            root = f"a{i}"
            omega = rng.random() < cfg.omega_prob
            if style == "plain":
                b.free.append(root)
                b.basis.append(BasisElement(f"w{i}", (BasisTerm(root),), (), omega))
            elif style == "shifted":
                b.free.append(root)
                c = f"c{i}"
                depth = rng.randint(1, 2)
                chain = [f"{c}_{d}" for d in range(depth)]
                for d, v in enumerate(chain):
                    b.parents[v] = None if d == 0 else chain[d - 1]
                k = rng.randint(1, 2)
                b.basis.append(BasisElement(f"w{i}", (BasisTerm(root, k),), {chain[-1]: 1}, omega))
            else:
                u = random_sequence(rng, cfg.max_gaps, min_gaps=1 if kind == "gappy" else 0)
                G, w = realize_sequence(u, p)
                rename = b.graft(G.forest, f"g{i}")
                terms = tuple(BasisTerm(rename[t.gen], t.p_power, t.unit) for t in w.terms)
                tors = {rename[g]: c for g, c in w.torsion}
                has_chains = any(f.kind == "chains" for f in G.forest.families)
                b.basis.append(BasisElement(f"w{i}", terms, tors, omega and not has_chains))
        if b.node_count() > cfg.max_nodes:
            continue
        try:
            return b.module()
        except ModelError:
            continue
    raise ModelError("could not generate a module within the caps")


# -- rebuilding from invariants --------------------------------------------------------


def canonical_module(P: InvariantProfile, p: int, tag: str = "k") -> ModuleDesc:
    """A module whose profile is P, assembled from chains, families and plain
    or w-high free roots."""
    b = _Builder(p)
    ef = P.u_hat.finite_default
    if ef == OMEGA:
        raise ModelError("profiles with w at every finite height are not rebuilt")
    spare = ef
    counter = iter(range(10**6))

    def name(kind: str) -> str:
        return f"{tag}{kind}{next(counter)}"

    for e, count in P.w_hat:
        tail = e.representative.tail
        if isinstance(tail, InfTail):
            raise ModelError("w-hat class with an infinite tail")
        limit = tail.base
        if limit not in (ZERO, OMEGA):
            raise ModelError(f"class with limit part {limit} is not rebuilt")
        copies = [True] if count == OMEGA else [False] * count
        for omega in copies:
            root = name("a")
            b.free.append(root)
            if limit == OMEGA:
                if omega:
                    raise ModelError("times-omega w-high basis elements are not rebuilt")
                b.families.append(Family(root, "chains"))
                spare -= 1
            b.basis.append(BasisElement(name("w"), (BasisTerm(root),), (), omega))
    for h, v in P.u_hat.entries:
        if h is INF:
            reps = [True] if v == OMEGA else [False] * v
            for rep in reps:
                r = name("s")
                b.parents[r] = None
                b.families.append(Family(r, "spine"))
                if rep:
                    b.replicated.add(r)
        elif h.is_finite():
            if v == OMEGA:
                b.families.append(Family(None, "const", h.finite_part + 1))
                continue
            for _ in range(v - ef):
                chain = [name("c") for _ in range(h.finite_part + 1)]
                for d, node in enumerate(chain):
                    b.parents[node] = None if d == 0 else chain[d - 1]
        else:
            if h.limit_part != OMEGA or v == OMEGA:
                raise ModelError(f"u-hat entry at {h} is not rebuilt")
            for _ in range(v):
                chain = [name("r") for _ in range(h.finite_part + 1)]
                for d, node in enumerate(chain):
                    b.parents[node] = None if d == 0 else chain[d - 1]
                b.families.append(Family(chain[-1], "chains"))
                spare -= 1
    if spare < 0:
        raise ModelError("profile needs more chain families than it records")
    for _ in range(spare):
        b.families.append(Family(None, "chains"))
    return b.module()


def renamed(G: ModuleDesc, tag: str, rng: random.Random | None = None) -> ModuleDesc:
    """The same module with fresh names and, optionally, basis elements
    replaced by multiples p^k w."""
    f = G.forest
    rename = {v: f"{tag}{v}" for v in f.explicit_nodes()}
    b = _Builder(G.p)
    b.graft(f, tag)
    b.replicated = {rename[r] for r in f.replicated}
    for e in G.basis:
        k = rng.randint(0, 2) if rng else 0
        terms = tuple(BasisTerm(rename[t.gen], t.p_power + k, t.unit) for t in e.terms)
        tors = {rename[g]: c * G.p**k for g, c in e.torsion}
        b.basis.append(BasisElement(f"{tag}{e.name}", terms, tors, e.times_omega))
    return b.module()


def equivalent_partner(G: ModuleDesc, rng: random.Random) -> ModuleDesc:
    if rng.random() < 0.7:
        try:
            return canonical_module(profile(G), G.p)
        except ModelError:
            pass
    return renamed(G, "r", rng)


def perturb_profile(P: InvariantProfile, rng: random.Random) -> InvariantProfile:
    entries = dict(P.u_hat.entries)
    w = dict(P.w_hat)
    ef = P.u_hat.finite_default
    move = rng.choice(["add-chain", "drop-entry", "spine", "free", "class", "omega"])
    if move == "drop-entry" and entries:
        h = rng.choice(sorted(entries, key=lambda x: (x is INF, () if x is INF else x.terms)))
        v = entries.pop(h)
        if v != OMEGA and v > 1 and (h is INF or not h.is_finite() or v - 1 > ef):
            entries[h] = v - 1
    elif move == "spine":
        v = entries.get(INF, 0)
        entries[INF] = OMEGA if v == OMEGA else v + 1
    elif move in ("free", "class", "omega") and (move == "free" or w):
        from .ulmseq import canonical_class

        if move == "free" or not w:
            e = canonical_class(UlmSequence((), SuccTail(ZERO)))
            w[e] = OMEGA if w.get(e) == OMEGA else w.get(e, 0) + 1
        elif move == "class":
            e = rng.choice(sorted(w, key=str))
            v = w.pop(e)
            if v != OMEGA and v > 1:
                w[e] = v - 1
            other = UlmSequence((), SuccTail(OMEGA if e.representative.tail.base == ZERO else ZERO))
            e2 = canonical_class(other)
            if e2.representative.tail.base == OMEGA:
                ef_new = ef
                ef = ef_new + 1 if ef_new != OMEGA else ef_new
            w[e2] = OMEGA if w.get(e2) == OMEGA else w.get(e2, 0) + 1
        else:
            e = rng.choice(sorted(w, key=str))
            w[e] = 1 if w[e] == OMEGA else OMEGA
    else:
        k = Ordinal.of(rng.randint(0, 3))
        v = entries.get(k, ef)
        entries[k] = OMEGA if v == OMEGA else v + 1
    u = UHat.build({h: (v if (h is INF or not h.is_finite()) else _minus(v, ef)) for h, v in entries.items()}, ef)
    from .classify import _count_classes

    classes = []
    for e, v in w.items():
        classes.extend([(e, False)] * v if v != OMEGA else [(e, True)])
    return InvariantProfile(u, _count_classes(classes))


def _minus(v, ef):
    if v == OMEGA:
        return OMEGA
    return v - ef


def inequivalent_partner(G: ModuleDesc, rng: random.Random) -> ModuleDesc:
    P = profile(G)
    for _ in range(100):
        Q = perturb_profile(P, rng)
        if compare_profiles(P, Q).equivalent:
            continue
        try:
            return canonical_module(Q, G.p, "q")
        except ModelError:
            continue
    raise ModelError("no inequivalent partner found")


def random_pair(rng: random.Random, equivalent: bool, kind: str = "mixed", cfg: CorpusConfig = DEFAULT):
    for _ in range(100):
        G = random_module(rng, kind, cfg)
        try:
            H = equivalent_partner(G, rng) if equivalent else inequivalent_partner(G, rng)
        except ModelError:
            continue
        return G, H
    raise ModelError("pair generation failed")
