import random

import pytest

from warfield.classify import decide_equiv, profile
from warfield.corpus import (
    CorpusConfig,
    canonical_module,
    gap_count,
    random_module,
    random_pair,
    random_sequence,
)
from warfield.io import dumps
from warfield.module_model import ModelError, validate_pdb
from warfield.ordinal import OMEGA, Ordinal
from warfield.ulmseq import is_admissible


def explicit_nodes(G):
    return len(G.forest.parents)


@pytest.mark.parametrize("kind", ["torsion", "torsion-families", "mixed", "gappy"])
def test_modules_respect_caps(kind):
    rng = random.Random(kind)
    for _ in range(40):
        G = random_module(rng, kind)
        assert explicit_nodes(G) <= 8 and len(G.free) <= 3
        assert validate_pdb(G)[0]
        if kind == "torsion":
            assert G.forest.is_finite() and not G.free


def test_gappy_modules_have_a_gap():
    rng = random.Random(2)
    for _ in range(30):
        G = random_module(rng, "gappy")
        from warfield.module_model import ulm_sequence_of

        assert any(gap_count(ulm_sequence_of(G, G.basis_vector(b.name))) >= 1 for b in G.basis)


def test_sequences_are_admissible_and_bounded():
    rng = random.Random(3)
    limit = Ordinal.of(0) + OMEGA + OMEGA
    for _ in range(100):
        u = random_sequence(rng)
        assert is_admissible(u) and gap_count(u) <= 3
        for e in u.prefix:
            assert e < limit


def test_generation_is_deterministic():
    a = [dumps(random_module(random.Random(7), "mixed")) for _ in range(2)]
    assert a[0] == a[1]


def test_canonical_module_has_the_same_profile():
    rng = random.Random(4)
    done = 0
    for _ in range(60):
        G = random_module(rng, rng.choice(["torsion", "torsion-families", "mixed"]))
        try:
            K = canonical_module(profile(G), G.p)
        except ModelError:
            continue
        assert profile(K) == profile(G)
        done += 1
    assert done >= 30


@pytest.mark.parametrize("equivalent", [True, False])
def test_pairs(equivalent):
    rng = random.Random(int(equivalent))
    for _ in range(30):
        G, H = random_pair(rng, equivalent)
        assert decide_equiv(G, H).equivalent == equivalent


def test_config_caps_are_honoured():
    cfg = CorpusConfig(max_nodes=4, max_free=1)
    rng = random.Random(8)
    for _ in range(30):
        G = random_module(rng, "mixed", cfg)
        assert explicit_nodes(G) <= 4 and len(G.free) <= 1
