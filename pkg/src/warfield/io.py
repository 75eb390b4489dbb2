"""Module description files (JSON) and the element expression language."""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Any

from .forest import Family, Forest, ForestError, split_copy
from .module_model import BasisElement, BasisTerm, Element, ModelError, ModuleDesc, validate_pdb


class FormatError(ValueError):
    """A malformed file or expression; the message names the offending field."""


# -- element expressions -----------------------------------------------------------

_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
    (?:(?P<coef>\(\s*-?\d+\s*(?:/\s*\d+\s*)?\)|\d+(?:/\d+)?)\s*\*\s*)?
    (?:p\^(?P<pk>\d+)\s*\*\s*)?
    (?:t\((?P<node>[^()\s]+)\)|(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\#\d+)?))\s*""",
    re.VERBOSE,
)


def parse_terms(text: str, p: int) -> list[tuple[Fraction, str, str]]:
    """Split an expression into (coefficient, kind, id) with kind 'node' or 'name'."""
    text = text.strip()
    if text in ("", "0"):
        return []
    out = []
    pos = 0
    first = True
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise FormatError(f"cannot parse element expression at column {pos + 1}: {text[pos:]!r}")
        if not first and not m.group("sign"):
            raise FormatError(f"expected '+' or '-' at column {pos + 1} in {text!r}")
        first = False
        coef = Fraction(m.group("coef").strip("() ").replace(" ", "")) if m.group("coef") else Fraction(1)
        if m.group("sign") == "-":
            coef = -coef
        if m.group("pk"):
            coef *= p ** int(m.group("pk"))
        kind, ident = ("node", m.group("node")) if m.group("node") else ("name", m.group("name"))
        out.append((coef, kind, ident))
        pos = m.end()
    return out


def parse_element(G: ModuleDesc, text: str) -> Element:
    """Evaluate an expression such as ``3*p^2*a1 + t(n4) - t(fam0:3,1)``.

    Bare names denote free roots or basis elements (``w#2`` for copies)."""
    terms = parse_terms(text, G.p)
    names = {b.name for b in G.basis}
    parts: list[tuple[Fraction, Element]] = []
    for coef, kind, ident in terms:
        try:
            if kind == "node" or split_copy(ident)[0] in G.free:
                if kind == "node" and G.forest.is_free_root(ident):
                    raise FormatError(f"t({ident}) names a free root; write it bare")
                if not G.forest.exists(ident):
                    raise FormatError(f"unknown generator {ident!r}")
                parts.append((coef, G.element({ident: 1})))
            elif split_copy(ident)[0] in names:
                parts.append((coef, G.basis_vector(ident)))
            else:
                raise FormatError(f"unknown name {ident!r}")
        except (ModelError, ForestError) as exc:
            raise FormatError(str(exc)) from exc
    for coef, _ in parts:
        if coef.denominator % G.p == 0:
            raise FormatError(f"coefficient {coef} is not p-local")
    return G.combine(parts)


# -- module files ----------------------------------------------------------------------


def _pattern(fam: Family) -> str:
    if fam.kind == "chains":
        return "chains:n"
    if fam.kind == "const":
        return f"chains:const:{fam.length}"
    return "divisible-spine"


def _family(pattern: str, attach, where: str) -> Family:
    if attach == "new-root":
        attach = None
    if pattern == "chains:n":
        return Family(attach, "chains")
    if pattern == "divisible-spine":
        return Family(attach, "spine")
    m = re.fullmatch(r"chains:const:(\d+)", pattern)
    if m and int(m.group(1)) >= 1:
        return Family(attach, "const", int(m.group(1)))
    raise FormatError(f"{where}.pattern: unknown family pattern {pattern!r}")


def _need(obj: dict, key: str, where: str, kind):
    if key not in obj:
        raise FormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if kind is int and isinstance(val, bool) or not isinstance(val, kind):
        raise FormatError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}")
    return val


def module_from_dict(data: Any) -> ModuleDesc:
    if not isinstance(data, dict):
        raise FormatError("top level: expected an object")
    p = _need(data, "p", "top level", int)
    if p < 2 or any(p % d == 0 for d in range(2, int(p**0.5) + 1)):
        raise FormatError(f"p: {p} is not prime")
    parents: dict[str, str | None] = {}
    for i, rec in enumerate(data.get("forest", [])):
        where = f"forest[{i}]"
        if not isinstance(rec, dict):
            raise FormatError(f"{where}: expected an object")
        node = _need(rec, "id", where, str)
        if node in parents:
            raise FormatError(f"{where}.id: duplicate node {node!r}")
        parent = rec.get("parent")
        if parent is not None and not isinstance(parent, str):
            raise FormatError(f"{where}.parent: expected a string or null")
        parents[node] = parent
    families = []
    for i, rec in enumerate(data.get("families", [])):
        where = f"families[{i}]"
        if not isinstance(rec, dict):
            raise FormatError(f"{where}: expected an object")
        families.append(_family(_need(rec, "pattern", where, str), _need(rec, "attach", where, str), where))
    free = data.get("free", [])
    if not isinstance(free, list) or not all(isinstance(g, str) for g in free):
        raise FormatError("free: expected a list of names")
    replicated = data.get("replicated", [])
    try:
        forest = Forest(p, parents, tuple(free), tuple(families), frozenset(replicated))
    except (ForestError, ValueError) as exc:
        raise FormatError(f"forest: {exc}") from exc
    skeleton = ModuleDesc(forest, ())
    basis = []
    for i, rec in enumerate(data.get("basis", [])):
        where = f"basis[{i}]"
        if not isinstance(rec, dict):
            raise FormatError(f"{where}: expected an object")
        name = _need(rec, "name", where, str)
        terms = []
        for j, t in enumerate(_need(rec, "terms", where, list)):
            tw = f"{where}.terms[{j}]"
            if not isinstance(t, dict):
                raise FormatError(f"{tw}: expected an object")
            gen = _need(t, "gen", tw, str)
            if gen not in free:
                raise FormatError(f"{tw}.gen: {gen!r} is not a free generator")
            k, unit = t.get("p_power", 0), t.get("unit", 1)
            if not isinstance(k, int) or k < 0 or not isinstance(unit, int) or unit % p == 0:
                raise FormatError(f"{tw}: p_power must be a natural and unit an integer prime to p")
            terms.append(BasisTerm(gen, k, unit))
        torsion: dict[str, int] = {}
        text = rec.get("torsion", "")
        try:
            for coef, kind, ident in parse_terms(text, p):
                if kind != "node" or coef.denominator != 1:
                    raise FormatError("torsion part must use integer multiples of t(node) terms")
                torsion[ident] = torsion.get(ident, 0) + int(coef)
            for ident in torsion:
                if not skeleton.forest.exists(ident):
                    raise FormatError(f"unknown node {ident!r}")
        except FormatError as exc:
            raise FormatError(f"{where}.torsion: {exc}") from exc
        basis.append(BasisElement(name, tuple(terms), torsion, bool(rec.get("times_omega", False))))
    try:
        G = ModuleDesc(forest, tuple(basis))
    except (ModelError, ForestError) as exc:
        raise FormatError(f"basis: {exc}") from exc
    ok, problems = validate_pdb(G)
    if not ok:
        raise FormatError("basis: " + "; ".join(problems))
    return G


def module_to_dict(G: ModuleDesc) -> dict:
    f = G.forest
    out: dict[str, Any] = {"p": G.p}
    out["forest"] = [{"id": v, "parent": f.parents[v]} for v in f.parents]
    out["families"] = [
        {"attach": "new-root" if fam.attach is None else fam.attach, "pattern": _pattern(fam)} for fam in f.families
    ]
    out["free"] = list(f.free)
    omega_roots = set()
    for b in G.basis:
        if b.times_omega:
            omega_roots.update(f.root_of(g) for g in b.coefficients(G.p))
    extra = sorted(set(f.replicated) - omega_roots)
    if extra:
        out["replicated"] = extra
    basis = []
    for b in G.basis:
        tors = " + ".join(f"t({g})" if c == 1 else f"{c}*t({g})" for g, c in b.torsion if c).replace("+ -", "- ")
        basis.append(
            {
                "name": b.name,
                "terms": [{"gen": t.gen, "p_power": t.p_power, "unit": t.unit} for t in b.terms],
                "torsion": tors,
                "times_omega": b.times_omega,
            }
        )
    out["basis"] = basis
    return out


def dumps(G: ModuleDesc) -> str:
    return json.dumps(module_to_dict(G), indent=2) + "\n"


def loads(text: str) -> ModuleDesc:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return module_from_dict(data)


def load(path: str) -> ModuleDesc:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc
    try:
        return loads(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def parse_script(G: ModuleDesc, H: ModuleDesc, lines) -> list[tuple[str, Element]]:
    """Challenge lines ``L: expr`` or ``R: expr``; blank lines and '#' comments skipped."""
    out = []
    for n, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = re.fullmatch(r"([LR])\s*:\s*(.+)", line)
        if not m:
            raise FormatError(f"script line {n}: expected 'L: expr' or 'R: expr'")
        side, expr = m.groups()
        try:
            x = parse_element(G if side == "L" else H, expr)
        except FormatError as exc:
            raise FormatError(f"script line {n}: {exc}") from exc
        if x.is_zero():
            raise FormatError(f"script line {n}: challenge is zero")
        out.append((side, x))
    return out
