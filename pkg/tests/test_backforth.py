import random

import pytest

from warfield.backforth import (
    CASE_1,
    CASE_2,
    INFINITY,
    NotEquivalent,
    PartialIso,
    case2_capacity,
    check_heights,
    check_well_defined,
    extend_once,
    find_proper,
    initial_matching,
    is_nice,
    min_rule_holds,
    run_game,
    stable_proper_exponent,
)
from warfield.forest import Family, Forest
from warfield.io import parse_element
from warfield.module_model import BasisElement, BasisTerm, ModuleDesc, realize_sequence
from warfield.ordinal import INF, Ordinal
from warfield.ulmseq import parse_sequence


def gap_module(p=2):
    f = Forest(p, {"c": None}, ("a",))
    return ModuleDesc(f, (BasisElement("w", (BasisTerm("a", 1),), {"c": 1}),))


def z_p2(p=2):
    return ModuleDesc(Forest(p, {"r": None, "d": "r"}), ())


def test_find_proper_examples():
    G = ModuleDesc(Forest(2, {"x": None, "y": "x", "z": None}), ())
    y = G.element({"z": 1})
    assert find_proper(G, [], y) == y
    S = [G.element({"x": 1, "z": 1})]
    best = find_proper(G, S, y)
    assert G.height(best) == Ordinal.of(1)
    spine = ModuleDesc(Forest(2, {"s": None, "t": None}, families=(Family("s", "spine"),)), ())
    rep = find_proper(spine, [spine.element({"s": 1, "t": 1})], spine.element({"t": 1}))
    assert spine.height(rep) is INF


def test_is_nice_on_basis_spans():
    G = gap_module()
    probes = [G.element({"a": k, "c": j}) for k in range(4) for j in range(2)]
    assert is_nice(G, [G.basis_vector("w")], probes)
    assert is_nice(G, [G.basis_vector("w"), G.element({"c": 1})], probes)


def test_case2_capacity_examples():
    G = ModuleDesc(Forest(2, {"x": None, "y": None}), ())
    assert case2_capacity(G, [], Ordinal.of(0))[0]
    assert not case2_capacity(G, [G.element({"x": 1}), G.element({"y": 1})], Ordinal.of(0))[0]
    assert not case2_capacity(G, [], Ordinal.of(1))[0]
    many = ModuleDesc(Forest(2, {}, families=(Family(None, "const", 1),)), ())
    assert case2_capacity(many, [many.element({"fam0:1,0": 1})], Ordinal.of(0))[0]


def test_stable_proper_exponent_examples():
    G = ModuleDesc(Forest(2, {"c": None, "d": "c"}, ("a", "b")), ())
    a = G.element({"a": 1})
    assert stable_proper_exponent(G, [], a) == 0
    assert stable_proper_exponent(G, [G.element({"b": 1})], a) == 0
    assert stable_proper_exponent(G, [G.element({"d": 1})], G.element({"a": 1, "d": 1})) == 0


def test_stable_proper_exponent_on_a_gap():
    G = gap_module()
    w, c = G.basis_vector("w"), G.element({"c": 1})
    # w - c = p*a sits strictly above w, while p*w = p^2*a has no torsion to shed
    n = stable_proper_exponent(G, [c], w)
    assert n == 1
    assert min_rule_holds(G, [c], w, n)
    assert not min_rule_holds(G, [c], w, n - 1)


def test_extend_on_cyclic_module_uses_torsion_cases():
    G, H = z_p2(), z_p2()
    f = PartialIso(G, H)
    f, steps = extend_once(f, G.element({"d": 1}))
    assert [s for s, _, _ in steps] == [CASE_2, CASE_1]
    check_well_defined(f)
    for k in range(4):
        x = G.element({"d": k})
        assert G.height(x) == H.height(f.apply(x))


def test_extend_torsion_generator_against_basis_map():
    G = gap_module()
    f, _ = initial_matching(G, G)
    f, steps = extend_once(f, G.element({"c": 1}))
    y = f.apply(G.element({"c": 1}))
    assert G.height(y) == Ordinal.of(0) and not G.scale(2, y).coeffs


def test_infinity_branch_on_divisible_parts():
    G = ModuleDesc(Forest(2, {"s": None}, families=(Family("s", "spine"),)), ())
    f = PartialIso(G, G)
    f, steps = extend_once(f, G.element({"fam0:1,1": 1}))
    assert INFINITY in [s for s, _, _ in steps]
    check_heights(f)


def test_gap_module_against_its_realization():
    G = gap_module()
    H, _ = realize_sequence(parse_sequence("(0 | succ 2)"), 2)
    trace = run_game(G, H, rounds=6, seed=4)
    assert len(trace.records) == 6


def test_scripted_self_game_has_one_record_per_round():
    G = gap_module()
    script = [("L", parse_element(G, "a")), ("R", parse_element(G, "w")), ("L", parse_element(G, "t(c)")), ("R", parse_element(G, "3*a - t(c)"))]
    trace = run_game(G, G, script=script)
    assert [r.round for r in trace.records] == [1, 2, 3, 4]
    assert [r.side for r in trace.records] == ["L", "R", "L", "R"]


def test_non_equivalent_pair_is_refused():
    with pytest.raises(NotEquivalent) as info:
        run_game(gap_module(), ModuleDesc(Forest(2, {}, ("a",)), (BasisElement("w", (BasisTerm("a", 1),)),)))
    assert info.value.verdict.render() == "DISTINGUISHED u_hat@0: 1 vs 0"


def test_games_are_deterministic_given_a_seed():
    G = gap_module(3)
    H, _ = realize_sequence(parse_sequence("(0 | succ 2)"), 3)
    a = run_game(G, H, rounds=5, seed=11).render(detail=True)
    b = run_game(G, H, rounds=5, seed=11).render(detail=True)
    assert a == b


def test_every_map_preserves_heights_on_random_combinations():
    G = gap_module()
    H, _ = realize_sequence(parse_sequence("(0 | succ 2)"), 2)
    trace = run_game(G, H, rounds=6, seed=2)
    rng = random.Random(0)
    for f in trace.maps:
        check_well_defined(f)
        check_heights(f, rng, samples=40)
