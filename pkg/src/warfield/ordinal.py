"""Ordinals below w^w in Cantor normal form, plus the height symbol ``inf``.

An :class:`Ordinal` is a tuple of ``(exponent, coefficient)`` terms with
strictly decreasing exponents; ``Ordinal(())`` is zero.  ``INF`` is a
separate singleton that compares above every ordinal.

Text syntax: ``0``, ``7``, ``w``, ``w+3``, ``w.2+1``, ``w^2.3+w.4+5``, ``inf``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable, Union


class OrdinalError(ValueError):
    pass


@total_ordering
class Infinity:
    """The height of an element lying in every p^a G."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        if other is self or isinstance(other, (Ordinal, int)):
            return False
        return NotImplemented

    def __hash__(self):
        return hash("inf")

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __add__(self, other):
        return self

    def __reduce__(self):
        return (Infinity, ())


INF = Infinity()


@total_ordering
@dataclass(frozen=True)
class Ordinal:
    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        last = None
        for e, c in self.terms:
            if e < 0 or c < 1:
                raise OrdinalError(f"bad CNF term {(e, c)}")
            if last is not None and e >= last:
                raise OrdinalError("exponents must strictly decrease")
            last = e

    @classmethod
    def of(cls, n: int) -> "Ordinal":
        if n < 0:
            raise OrdinalError("negative ordinal")
        return cls(((0, n),)) if n else cls(())

    @classmethod
    def omega(cls, k: int = 1, exponent: int = 1) -> "Ordinal":
        return cls(((exponent, k),)) if k else cls(())

    # -- structure ---------------------------------------------------------
    @property
    def finite_part(self) -> int:
        if self.terms and self.terms[-1][0] == 0:
            return self.terms[-1][1]
        return 0

    @property
    def limit_part(self) -> "Ordinal":
        """The ordinal with its finite part removed (zero for naturals)."""
        if self.terms and self.terms[-1][0] == 0:
            return Ordinal(self.terms[:-1])
        return self

    def is_finite(self) -> bool:
        return all(e == 0 for e, _ in self.terms)

    def is_limit(self) -> bool:
        return bool(self.terms) and self.terms[-1][0] > 0

    def is_successor(self) -> bool:
        return self.finite_part > 0

    def predecessor(self) -> "Ordinal":
        if not self.is_successor():
            raise OrdinalError(f"{self} has no predecessor")
        return self.plus(-1)

    def plus(self, k: int) -> "Ordinal":
        """self + k for an integer k; negative k only removes finite part."""
        n = self.finite_part + k
        if n < 0:
            raise OrdinalError(f"{self} - {-k} is not an ordinal")
        return Ordinal(self.limit_part.terms + (((0, n),) if n else ()))

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        if other is INF:
            return INF
        if isinstance(other, int):
            return self.plus(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        if not other.terms:
            return self
        lead = other.terms[0][0]
        kept = [t for t in self.terms if t[0] >= lead]
        if kept and kept[-1][0] == lead:
            e, c = kept.pop()
            merged = [(e, c + other.terms[0][1])]
            return Ordinal(tuple(kept + merged) + other.terms[1:])
        return Ordinal(tuple(kept) + other.terms)

    def __lt__(self, other):
        if other is INF:
            return True
        if isinstance(other, int):
            other = Ordinal.of(other)
        if not isinstance(other, Ordinal):
            return NotImplemented
        for (e1, c1), (e2, c2) in zip(self.terms, other.terms):
            if e1 != e2:
                return e1 < e2
            if c1 != c2:
                return c1 < c2
        return len(self.terms) < len(other.terms)

    def __eq__(self, other):
        if isinstance(other, int):
            return self.terms == Ordinal.of(other).terms
        if isinstance(other, Ordinal):
            return self.terms == other.terms
        return False

    def __hash__(self):
        return hash(self.terms)

    def __repr__(self):
        return f"Ordinal({format_height(self)!r})"

    def __str__(self):
        return format_height(self)


Height = Union[Ordinal, Infinity]

ZERO = Ordinal()
OMEGA = Ordinal.omega()


def as_height(x) -> Height:
    if x is INF or isinstance(x, Ordinal):
        return x
    if isinstance(x, int):
        return Ordinal.of(x)
    if isinstance(x, str):
        return parse_height(x)
    raise TypeError(f"not a height: {x!r}")


def compare(a, b) -> int:
    """-1, 0 or 1 as a is below, equal to, or above b."""
    a, b = as_height(a), as_height(b)
    if a == b:
        return 0
    return -1 if a < b else 1


def successor(a: Height) -> Height:
    return INF if a is INF else a.plus(1)


def add_nat(a: Height, k: int) -> Height:
    return INF if a is INF else a.plus(k)


def next_limit(base: Ordinal) -> Ordinal:
    """sup{base + n : n in w}."""
    return base.limit_part + OMEGA


def sup_of_family(pattern) -> Height:
    """Least upper bound of a finite list of heights, or of ``("linear", base)``
    meaning the family base + n for all n."""
    if isinstance(pattern, tuple) and len(pattern) == 2 and pattern[0] == "linear":
        base = as_height(pattern[1])
        return INF if base is INF else next_limit(base)
    best: Height = ZERO
    for h in pattern:
        h = as_height(h)
        if best < h:
            best = h
    return best


def min_height(heights: Iterable[Height]) -> Height:
    best: Height = INF
    for h in heights:
        if h < best:
            best = h
    return best


# -- text syntax -------------------------------------------------------------

_TERM = re.compile(r"^(?:w(?:\^(\d+))?(?:\.(\d+))?|(\d+))$")


def parse_height(text: str) -> Height:
    s = text.strip().replace(" ", "")
    if s in ("inf", "∞"):
        return INF
    if not s:
        raise OrdinalError("empty ordinal")
    terms: list[tuple[int, int]] = []
    for part in s.split("+"):
        m = _TERM.match(part)
        if not m:
            raise OrdinalError(f"bad ordinal term {part!r} in {text!r}")
        if m.group(3) is not None:
            e, c = 0, int(m.group(3))
        else:
            e = int(m.group(1)) if m.group(1) is not None else 1
            c = int(m.group(2)) if m.group(2) is not None else 1
        if c == 0:
            continue
        if terms and e >= terms[-1][0]:
            raise OrdinalError(f"exponents must decrease in {text!r}")
        terms.append((e, c))
    return Ordinal(tuple(terms))


def parse_ordinal(text: str) -> Ordinal:
    h = parse_height(text)
    if h is INF:
        raise OrdinalError("inf is not an ordinal")
    return h


def format_height(h: Height) -> str:
    if h is INF:
        return "inf"
    if not h.terms:
        return "0"
    out = []
    for e, c in h.terms:
        if e == 0:
            out.append(str(c))
            continue
        t = "w" if e == 1 else f"w^{e}"
        if c != 1:
            t += f".{c}"
        out.append(t)
    return "+".join(out)
