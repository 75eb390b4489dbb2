import json
from pathlib import Path

import pytest

from warfield.cli import main

DATA = Path(__file__).resolve().parent.parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "name, expected",
    [
        ("z_p3", "u_hat: 2 -> 1\n"),
        ("free", "w_hat: (| succ 0) -> 1\n"),
        ("prufer", "u_hat: inf -> 1\n"),
        ("gap", "u_hat: 0 -> 1\nw_hat: (| succ 0) -> 1\n"),
    ],
)
def test_invariants(capsys, name, expected):
    code, out, _ = run(capsys, "invariants", DATA / f"{name}.json")
    assert (code, out) == (0, expected)


def test_equiv_exit_codes(capsys):
    assert run(capsys, "equiv", DATA / "gap.json", DATA / "gap.json")[0] == 0
    code, out, _ = run(capsys, "equiv", DATA / "gap.json", DATA / "shift.json")
    assert (code, out) == (1, "DISTINGUISHED u_hat@0: 1 vs 0\n")
    code, _, err = run(capsys, "equiv", DATA / "malformed.json", DATA / "gap.json")
    assert code == 2 and "line 2 column 1" in err


def test_witness_script(capsys):
    code, out, _ = run(capsys, "witness", DATA / "gap.json", DATA / "gap.json", "--script", DATA / "self_pair.script")
    assert code == 0
    assert [line.split(" | ")[0] for line in out.splitlines()] == [f"round {i}" for i in range(1, 5)]


def test_witness_against_realized_sequence(capsys, tmp_path):
    code, text, _ = run(capsys, "realize", "(0 | succ 2)")
    assert code == 0
    realized = tmp_path / "realized.json"
    realized.write_text(text)
    code, out, _ = run(capsys, "witness", DATA / "gap.json", realized, "--seed", 7, "--rounds", 8)
    assert code == 0 and len(out.splitlines()) == 8
    again = run(capsys, "witness", DATA / "gap.json", realized, "--seed", 7, "--rounds", 8)[1]
    assert again == out


def test_witness_refuses_inequivalent(capsys):
    code, out, _ = run(capsys, "witness", DATA / "gap.json", DATA / "shift.json")
    assert (code, out) == (1, "DISTINGUISHED u_hat@0: 1 vs 0\n")


def test_witness_detail_lists_steps(capsys):
    code, out, _ = run(capsys, "witness", DATA / "z_p3.json", DATA / "z_p3.json", "--rounds", 3, "--detail")
    assert code == 0 and "  step | " in out


def test_interactive(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("L: t(d)\n\nR: t(m)\n"))
    code, out, _ = run(capsys, "witness", DATA / "z_p3.json", DATA / "z_p3.json", "--interactive")
    assert code == 0 and len(out.splitlines()) == 2


def test_height_and_ulmseq(capsys):
    assert run(capsys, "height", DATA / "gap.json", "w - t(c)")[:2] == (0, "1\n")
    assert run(capsys, "ulmseq", DATA / "gap.json", "w")[:2] == (0, "(0 | succ 2)\n")
    assert run(capsys, "height", DATA / "prufer.json", "t(s)")[:2] == (0, "inf\n")
    assert run(capsys, "height", DATA / "gap.json", "t(zz)")[0] == 2


def test_realize_round_trips(capsys, tmp_path):
    code, text, _ = run(capsys, "realize", "(1, w | succ w+2)", "--p", 3)
    assert code == 0
    f = tmp_path / "r.json"
    f.write_text(text)
    name = json.loads(text)["basis"][0]["name"]
    assert run(capsys, "ulmseq", f, name)[1] == "(1,w | succ w+2)\n"
    assert run(capsys, "realize", "(3, 1 | inf)")[0] == 2


def test_random_is_deterministic(capsys, tmp_path):
    for d in ("one", "two"):
        code, out, _ = run(capsys, "random", "--seed", 1, "--class", "torsion", "--count", 5, "--out", tmp_path / d)
        assert code == 0 and len(out.splitlines()) == 5
    one = sorted((tmp_path / "one").iterdir())
    two = sorted((tmp_path / "two").iterdir())
    assert [a.read_bytes() for a in one] == [b.read_bytes() for b in two]
    for f in one:
        assert run(capsys, "invariants", f)[0] == 0


def test_oracle_check(capsys, monkeypatch):
    code, out, _ = run(capsys, "oracle-check", DATA / "z_p3.json")
    assert code == 0 and out.endswith("PASS\n") and "equivalence: pass" in out
    monkeypatch.setenv("WARFIELD_TRUNCATION", "5")
    code, out, _ = run(capsys, "oracle-check", DATA / "gap.json", DATA / "generalized_prufer.json")
    assert code == 0 and out.count("PASS") == 2
    monkeypatch.setenv("WARFIELD_TRUNCATION", "lots")
    assert run(capsys, "oracle-check", DATA / "gap.json")[0] == 2
