import json
import random
from fractions import Fraction

import pytest

from warfield.corpus import random_module
from warfield.io import FormatError, dumps, loads, module_from_dict, parse_element, parse_script, parse_terms
from warfield.ordinal import Ordinal

GAP = {
    "p": 2,
    "forest": [{"id": "c", "parent": None}],
    "families": [],
    "free": ["a"],
    "basis": [{"name": "w", "terms": [{"gen": "a", "p_power": 1, "unit": 1}], "torsion": "t(c)", "times_omega": False}],
}


def gap():
    return module_from_dict(json.loads(json.dumps(GAP)))


def test_parse_terms():
    assert parse_terms("3*p^2*a1 + t(n4) - t(fam0:3,1)", 2) == [
        (Fraction(12), "name", "a1"),
        (Fraction(1), "node", "n4"),
        (Fraction(-1), "node", "fam0:3,1"),
    ]
    assert parse_terms("(1/3)*a", 2) == [(Fraction(1, 3), "name", "a")]
    assert parse_terms("0", 5) == []


@pytest.mark.parametrize("bad", ["a +", "a b", "3*", "t()", "+ + a"])
def test_parse_terms_rejects(bad):
    with pytest.raises(FormatError):
        parse_terms(bad, 2)


def test_parse_element_heights():
    G = gap()
    assert G.height(parse_element(G, "w - t(c)")) == Ordinal.of(1)
    assert G.height(parse_element(G, "w")) == Ordinal.of(0)
    assert G.height(parse_element(G, "(1/3)*p^2*a")) == Ordinal.of(2)


@pytest.mark.parametrize("bad", ["t(a)", "zz", "t(nope)", "(1/2)*a"])
def test_parse_element_rejects(bad):
    with pytest.raises(FormatError):
        parse_element(gap(), bad)


def test_field_diagnostics():
    data = json.loads(json.dumps(GAP))
    data["basis"][0]["terms"][0]["gen"] = "b"
    with pytest.raises(FormatError, match=r"basis\[0\]\.terms\[0\]\.gen"):
        module_from_dict(data)
    data = json.loads(json.dumps(GAP))
    data["p"] = 4
    with pytest.raises(FormatError, match="not prime"):
        module_from_dict(data)
    data = json.loads(json.dumps(GAP))
    data["forest"].append({"id": "c", "parent": None})
    with pytest.raises(FormatError, match=r"forest\[1\]\.id"):
        module_from_dict(data)
    data = json.loads(json.dumps(GAP))
    data["families"] = [{"attach": "c", "pattern": "chains:sometimes"}]
    with pytest.raises(FormatError, match=r"families\[0\]\.pattern"):
        module_from_dict(data)


def test_uncovered_free_root_is_rejected():
    data = json.loads(json.dumps(GAP))
    data["free"].append("b")
    with pytest.raises(FormatError, match="not covered"):
        module_from_dict(data)


def test_json_errors_carry_positions():
    with pytest.raises(FormatError, match="line 2 column"):
        loads('{"p": 2,\n ]')


def test_round_trip_is_byte_stable():
    rng = random.Random(5)
    for _ in range(60):
        kind = rng.choice(["torsion", "torsion-families", "mixed", "gappy"])
        text = dumps(random_module(rng, kind))
        assert dumps(loads(text)) == text


def test_scripts():
    G = gap()
    script = parse_script(G, G, ["# comment", "", "L: a", "R: w - t(c)"])
    assert [s for s, _ in script] == ["L", "R"]
    with pytest.raises(FormatError, match="script line 1"):
        parse_script(G, G, ["X: a"])
    with pytest.raises(FormatError, match="zero"):
        parse_script(G, G, ["L: a - a"])
