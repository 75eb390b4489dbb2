from hypothesis import given

from strategies import finite_forests
from warfield.forest import Forest
from warfield.oracle import (
    FiniteModule,
    OracleError,
    brute_height,
    brute_iso,
    brute_ulm,
    coordinate_height,
    exponent_ulm,
    realize_finite,
    smith_normal_form,
)
from warfield.ordinal import INF, Ordinal

import pytest


def test_brute_height_examples():
    assert brute_height(FiniteModule(2, (2,)), (0,)) is INF
    assert brute_height(FiniteModule(3, (2,)), (3,)) == Ordinal.of(1)
    assert brute_height(FiniteModule(2, (2, 1)), (2, 1)) == Ordinal.of(0)


def test_brute_ulm_examples():
    assert brute_ulm(FiniteModule(2, (2,))) == {1: 1}
    assert brute_ulm(FiniteModule(3, (1, 1))) == {0: 2}
    assert brute_ulm(FiniteModule(2, (3, 1))) == {0: 1, 2: 1}


def test_brute_iso_examples():
    assert brute_iso(FiniteModule(2, (2, 1)), FiniteModule(2, (1, 2)))
    assert not brute_iso(FiniteModule(2, (2, 1)), FiniteModule(2, (3,)))
    assert not brute_iso(FiniteModule(2, (3, 1)), FiniteModule(2, (2, 2)))
    assert brute_ulm(FiniteModule(2, (3, 1))) != brute_ulm(FiniteModule(2, (2, 2)))


def test_realize_finite_examples():
    M, img = realize_finite(Forest(2, {"r": None, "m": "r", "d": "m"}))
    assert M.exponents == (3,)
    M, img = realize_finite(Forest(2, {"x": None, "y": "x", "z": "x"}))
    assert M.exponents == (2, 1)
    assert M.scale(2, img["y"]) == img["x"]
    M, _ = realize_finite(Forest(2, {"x": None, "c1": "x", "c2": "c1", "z": "x"}))
    assert M.exponents == (3, 1)


def test_order_cap_enforced():
    with pytest.raises(OracleError):
        FiniteModule(2, (15,))
    assert FiniteModule(2, (15,), cap=None).order == 2**15


def test_smith_normal_form_diagonalizes():
    A = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
    diag, V = smith_normal_form(A)
    assert [abs(d) for d in diag] == [2, 6, 12]


@given(finite_forests())
def test_node_images_satisfy_the_relations(f):
    M, img = realize_finite(f)
    for v, w in f.parents.items():
        target = img[w] if w is not None else tuple(0 for _ in M.exponents)
        assert M.scale(f.p, img[v]) == target


@given(finite_forests(max_nodes=6))
def test_coordinate_formulas_match_enumeration(f):
    M, _ = realize_finite(f)
    assert exponent_ulm(M) == brute_ulm(M)
    for x in list(M.elements())[:200]:
        assert coordinate_height(M, x) == brute_height(M, x)


@given(finite_forests(max_nodes=6), finite_forests(max_nodes=6))
def test_isomorphism_iff_equal_invariants(f, g):
    M, _ = realize_finite(f)
    N, _ = realize_finite(g)
    assert brute_iso(M, N) == (M.p == N.p and brute_ulm(M) == brute_ulm(N))
