"""Acceptance criteria, each checked at its stated scale and time limit."""

import functools
import itertools
import random
import re
from collections import Counter
from pathlib import Path

from acceptance_log import criterion
from warfield.backforth import (
    HeightViolation,
    NotEquivalent,
    Stuck,
    min_rule_holds,
    run_game,
    stable_proper_exponent,
)
from warfield.classify import PdbDescriptor, align_bases, decide_equiv, profile, w_hat_from_pdb
from warfield.corpus import (
    equivalent_partner,
    inequivalent_partner,
    random_finite_forest,
    random_module,
    random_pair,
    random_sequence,
)
from warfield.golden import CASES, render_case
from warfield.module_model import ModelError, ModuleDesc, realize_sequence, ulm_sequence_of
from warfield.oracle import brute_height, brute_iso, brute_ulm, realize_finite, vector_of
from warfield.ordinal import INF, OMEGA, Ordinal
from warfield.ulmseq import canonical_class, entries, normalize

GOLDEN = Path(__file__).resolve().parent / "golden"
TAGS = ("torsion-case-1", "torsion-case-2", "infinity-branch")


@functools.lru_cache(maxsize=None)
def forest_corpus():
    rng = random.Random(2024)
    out = []
    for p in (2, 3):
        for _ in range(160):
            f = random_finite_forest(rng, p, 8)
            M, images = realize_finite(f)
            out.append((f, M, images))
    return out


def test_criterion_01_heights_match_brute_force():
    with criterion(1, "symbolic heights equal brute_height on every element", 120) as info:
        corpus = forest_corpus()
        checked = 0
        for f, M, images in corpus:
            G = ModuleDesc(f, ())
            nodes = sorted(f.parents)
            assert len(nodes) <= 8 and f.p in (2, 3)
            for digits in itertools.product(range(f.p), repeat=len(nodes)):
                coeffs = dict(zip(nodes, digits))
                hs = G.height(G.element(coeffs))
                hb = brute_height(M, vector_of(images, M, coeffs))
                assert hs == hb, f"{coeffs} in {f.parents}: {hs} vs {hb}"
                checked += 1
        info["summary"] = f"{len(corpus)} forests, {checked} elements, 0 mismatches"


def test_criterion_02_ulm_invariants_match_brute_force():
    with criterion(2, "ulm_invariants equal brute_ulm at every height", 60) as info:
        corpus = forest_corpus()
        for f, M, _ in corpus:
            counts = f.ulm_invariants()
            brute = brute_ulm(M)
            for k in range(sum(M.exponents) + 2):
                assert counts[Ordinal.of(k)] == brute.get(k, 0), f"{f.parents} at {k}"
            assert all(h is not INF and h.is_finite() for h in counts.support())
            assert counts.every_finite == 0
        info["summary"] = f"{len(corpus)} forests, exact"


def _finite_partner(G, rng, kind):
    if kind == 0:
        return equivalent_partner(G, rng)
    if kind == 1:
        for _ in range(50):
            try:
                H = inequivalent_partner(G, rng)
            except ModelError:
                continue
            if H.forest.is_finite():
                return H
        return None
    return ModuleDesc(random_finite_forest(rng, G.p, max(2, len(G.forest.parents))), ())


def test_criterion_03_equivalence_matches_isomorphism():
    with criterion(3, "decide_equiv agrees with brute_iso on finite torsion pairs", 60) as info:
        rng = random.Random(3)
        tally = Counter()
        pairs = 0
        while pairs < 200:
            G = random_module(rng, "torsion")
            H = _finite_partner(G, rng, pairs % 3)
            if H is None:
                continue
            verdict = decide_equiv(G, H).equivalent
            M, _ = realize_finite(G.forest, cap=None)
            N, _ = realize_finite(H.forest, cap=None)
            iso = brute_iso(M, N)
            assert verdict == iso, f"{G.forest.parents} vs {H.forest.parents}"
            tally["isomorphic" if iso else "not isomorphic"] += 1
            pairs += 1
        info["summary"] = f"200 pairs ({tally['isomorphic']} isomorphic, {tally['not isomorphic']} not), 0 disagreements"


def _class_counts(G, xs):
    return Counter(canonical_class(ulm_sequence_of(G, x)) for x in xs)


def test_criterion_04_w_hat_is_basis_independent():
    with criterion(4, "w_hat unchanged under multiples, subsets and align_bases", 60) as info:
        rng = random.Random(4)
        aligned = 0
        for i in range(100):
            G = random_module(rng, "mixed" if i % 2 else "gappy")
            A = PdbDescriptor.declared(G)
            scaled = []
            for label, x, omega in A.base:
                r = rng.choice([1, G.p - 1, G.p + 1]) * G.p ** rng.randint(0, 3)
                scaled.append((label, G.scale(r, x), omega))
            B = PdbDescriptor(G, tuple(scaled))
            assert B.validate()[0]
            assert w_hat_from_pdb(A) == w_hat_from_pdb(B) == profile(G).w_map()
            xs = [x for _, x, _ in A.base]
            ys = [y for _, y, _ in B.base]
            X = rng.sample(xs, rng.randint(1, len(xs)))
            Y = rng.sample(ys, rng.randint(1, len(ys)))
            X2, Y2, rounds = align_bases(A, B, X, Y)
            assert rounds <= G.rank() + 1
            assert _class_counts(G, X2) == _class_counts(G, Y2)
            aligned += 1
        info["summary"] = f"100 modules, {aligned} aligned subset pairs, identical w_hat"


def test_criterion_05_games_never_get_stuck():
    with criterion(5, "8-round games on equivalent mixed pairs keep heights", 300) as info:
        rng = random.Random(5)
        failures = []
        steps = Counter()
        for i in range(100):
            G, H = random_pair(rng, True, "mixed" if i % 2 else "gappy")
            try:
                trace = run_game(G, H, rounds=8, seed=i)
            except (Stuck, HeightViolation, ModelError) as exc:
                failures.append(f"pair {i}: {type(exc).__name__}: {exc}")
                continue
            assert len(trace.records) == 8
            steps.update(trace.strategy_counts())
        assert not failures, failures[:3]
        info["summary"] = "100 pairs, 0 stuck, steps " + ", ".join(f"{k}={v}" for k, v in sorted(steps.items()))


def test_criterion_06_inequivalent_pairs_are_distinguished():
    with criterion(6, "inequivalent pairs are distinguished, oracle confirms torsion ones", 120) as info:
        rng = random.Random(6)
        kinds = ["torsion", "torsion-families", "mixed", "gappy"]
        confirmed = 0
        for i in range(100):
            G, H = random_pair(rng, False, kinds[i % 4])
            v = decide_equiv(G, H)
            assert not v.equivalent and v.kind in ("u_hat", "w_hat")
            try:
                run_game(G, H, rounds=1)
                raise AssertionError("game accepted an inequivalent pair")
            except NotEquivalent:
                pass
            if G.forest.is_finite() and H.forest.is_finite() and not G.free and not H.free:
                M, _ = realize_finite(G.forest, cap=None)
                N, _ = realize_finite(H.forest, cap=None)
                assert not brute_iso(M, N)
                confirmed += 1
        assert confirmed >= 20
        info["summary"] = f"100 pairs distinguished, {confirmed} confirmed by the oracle"


def _span(G, gens, limit=400):
    ranges = []
    for s in gens:
        if G.is_torsion(s):
            ranges.append(range(G.p ** G.order_exponent(s)))
        else:
            ranges.append((0, 1, G.p))
    size = 1
    for r in ranges:
        size *= len(r)
    if size > limit:
        return None
    return [G.combine(zip(cs, gens)) for cs in itertools.product(*ranges)]


def _exponent_instance(rng):
    while True:
        G = random_module(rng, rng.choice(["mixed", "gappy"]), p=rng.choice([2, 3]))
        f = G.forest
        torsion_nodes = [v for v in sorted(f.parents) if not f.is_free_root(f.root_of(v))]
        b = rng.choice(G.basis)
        # a multiple of a basis element plus low torsion is improper until the torsion dies
        y = G.p_power(rng.randint(0, 2), G.basis_vector(b.name))
        if torsion_nodes and rng.random() < 0.8:
            y = G.add(y, G.element({rng.choice(torsion_nodes): 1}))
        support = [g for g in y.support() if g in torsion_nodes]
        extra = rng.sample(torsion_nodes, min(len(torsion_nodes), rng.randint(0, 2)))
        S = [G.element({g: 1}) for g in dict.fromkeys(support + extra)]
        others = [c for c in G.basis if c.name != b.name and G.basis_root(c.name) != G.basis_root(b.name)]
        if others and rng.random() < 0.5:
            S.append(G.basis_vector(rng.choice(others).name))
        if not S:
            continue
        span = _span(G, S)
        if span is None:
            continue
        return G, S, span, y


def test_criterion_07_stable_exponent_is_least_for_the_min_rule():
    with criterion(7, "stable_proper_exponent satisfies the min-rule and is least", 60) as info:
        rng = random.Random(7)
        ns = Counter()
        for _ in range(50):
            G, S, span, y = _exponent_instance(rng)
            n = stable_proper_exponent(G, S, y)
            assert min_rule_holds(G, span, y, n, max_v=6)
            if n > 0:
                assert not min_rule_holds(G, span, y, n - 1, max_v=6)
            ns[n] += 1
        assert sum(v for k, v in ns.items() if k > 0) >= 25
        info["summary"] = "50 instances, n distribution " + ", ".join(f"{k}:{v}" for k, v in sorted(ns.items()))


def test_criterion_08_realize_sequence_round_trip():
    with criterion(8, "realize_sequence round-trips on entries 0..10 and classes", 60) as info:
        rng = random.Random(8)
        limit = OMEGA + OMEGA
        gaps = Counter()
        for i in range(50):
            u = random_sequence(rng, max_gaps=3)
            assert all(e < limit for e in entries(u, 11) if e is not INF)
            G, w = realize_sequence(u, (2, 3)[i % 2])
            got = ulm_sequence_of(G, G.basis_vector(w.name))
            assert entries(got, 11) == entries(u, 11)
            assert canonical_class(got) == canonical_class(u)
            assert normalize(got) == normalize(u)
            gaps[sum(1 for a, b in zip(entries(u, 11), entries(u, 11)[1:]) if b != a.plus(1))] += 1
        info["summary"] = "50 sequences, gaps " + ", ".join(f"{k}:{v}" for k, v in sorted(gaps.items()))


def test_criterion_09_golden_traces_cover_every_case():
    with criterion(9, "golden traces reproduce and exercise both torsion cases and infinity", 60) as info:
        counts = Counter()
        for case in CASES:
            text = render_case(case)
            assert text == (GOLDEN / f"{case.name}.txt").read_text(encoding="utf-8"), case.name
            counts.update(m.group(1) for m in re.finditer(r"^  step \| ([a-z0-9-]+) \|", text, re.M))
        for tag in TAGS:
            assert counts[tag] >= 10, (tag, counts[tag])
        info["summary"] = f"{len(CASES)} traces byte-identical, " + ", ".join(f"{t}={counts[t]}" for t in TAGS)


def _pushed(trace, G, H):
    """The attached basis elements of G and their images, as finite base sets.

    Omega flags are dropped: an image may be a copy inside a replicated family of H."""
    first = trace.maps[0]
    source, image = [], []
    for (x, y), label in zip(first.pairs, first.X):
        assert trace.final.apply(x) == y
        source.append((label, x, False))
        image.append((label, y, False))
    return PdbDescriptor(H, tuple(image)), PdbDescriptor(G, tuple(source))


def test_criterion_10_profiles_survive_witness_maps():
    with criterion(10, "pushing pdbs through witness maps keeps u_hat and w_hat", 60) as info:
        rng = random.Random(10)
        elements = 0
        for i in range(50):
            G, H = random_pair(rng, True, "mixed" if i % 2 else "gappy")
            trace = run_game(G, H, rounds=6, seed=i)
            pushed, source = _pushed(trace, G, H)
            assert pushed.validate()[0]
            assert source.validate()[0]
            assert w_hat_from_pdb(pushed) == w_hat_from_pdb(source)
            assert profile(G) == profile(H)
            for (_, x, _), (_, y, _) in zip(source.base, pushed.base):
                assert normalize(ulm_sequence_of(G, x)) == normalize(ulm_sequence_of(H, y))
                elements += 1
            for x, y in trace.final.pairs:
                assert G.height(x) == H.height(y)
        info["summary"] = f"50 pairs, {elements} pushed basis elements keep their Ulm sequences"
