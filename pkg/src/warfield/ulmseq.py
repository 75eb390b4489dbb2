"""Ulm sequences with a finite description and their shift-equivalence classes.

A sequence is a finite prefix followed by a tail rule: either ``succ base``
(base, base+1, base+2, ...) or ``inf`` (all entries infinite).  Two
admissible sequences are equivalent when some shifts of them agree entrywise
from then on.  Beyond the prefixes only the tail rule matters, so the
decision is symbolic: both tails infinite, or both successor tails whose
bases share a limit part.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .ordinal import INF, Height, Ordinal, OrdinalError, ZERO, format_height, parse_height


@dataclass(frozen=True)
class SuccTail:
    base: Ordinal


@dataclass(frozen=True)
class InfTail:
    pass


Tail = Union[SuccTail, InfTail]


@dataclass(frozen=True)
class UlmSequence:
    prefix: tuple[Height, ...]
    tail: Tail

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))

    def __getitem__(self, i: int) -> Height:
        return entry(self, i)

    def __str__(self):
        return format_sequence(self)


def free_sequence(base: Ordinal = ZERO) -> UlmSequence:
    return UlmSequence((), SuccTail(base))


def entry(s: UlmSequence, i: int) -> Height:
    if i < len(s.prefix):
        return s.prefix[i]
    if isinstance(s.tail, InfTail):
        return INF
    return s.tail.base.plus(i - len(s.prefix))


def entries(s: UlmSequence, n: int) -> list[Height]:
    return [entry(s, i) for i in range(n)]


def is_admissible(s: UlmSequence) -> bool:
    seq = list(s.prefix)
    if isinstance(s.tail, SuccTail):
        seq.append(s.tail.base)
    else:
        seq.append(INF)
    for a, b in zip(seq, seq[1:]):
        if a is INF:
            if b is not INF:
                return False
        elif not a < b:
            return False
    return True


def normalize(s: UlmSequence) -> UlmSequence:
    """Absorb trailing prefix entries that the tail rule already predicts."""
    prefix = list(s.prefix)
    tail = s.tail
    if isinstance(tail, InfTail):
        while prefix and prefix[-1] is INF:
            prefix.pop()
    else:
        base = tail.base
        while prefix and base.is_successor() and prefix[-1] == base.predecessor():
            base = prefix.pop()
        tail = SuccTail(base)
    return UlmSequence(tuple(prefix), tail)


def shift(s: UlmSequence, k: int) -> UlmSequence:
    """Drop the first k entries."""
    if k <= len(s.prefix):
        return UlmSequence(s.prefix[k:], s.tail)
    if isinstance(s.tail, InfTail):
        return UlmSequence((), s.tail)
    return UlmSequence((), SuccTail(s.tail.base.plus(k - len(s.prefix))))


def _tail_key(s: UlmSequence):
    if isinstance(s.tail, InfTail):
        return ("inf",)
    return ("succ", s.tail.base.limit_part.terms)


def equivalent(a: UlmSequence, b: UlmSequence) -> bool:
    return _tail_key(a) == _tail_key(b)


def shift_alignment(a: UlmSequence, b: UlmSequence) -> tuple[int, int] | None:
    """Least (n, m), ordered by n+m then n, with shift(a, n) == shift(b, m)."""
    if not equivalent(a, b):
        return None
    bound = len(a.prefix) + len(b.prefix) + 2
    if isinstance(a.tail, SuccTail):
        bound += abs(a.tail.base.finite_part - b.tail.base.finite_part)
    for total in range(2 * bound + 1):
        for n in range(total + 1):
            m = total - n
            if normalize(shift(a, n)) == normalize(shift(b, m)):
                return n, m
    raise AssertionError("equivalent sequences failed to align")


@dataclass(frozen=True)
class UlmClass:
    representative: UlmSequence

    def __str__(self):
        return format_sequence(self.representative)


def canonical_class(s: UlmSequence) -> UlmClass:
    if isinstance(s.tail, InfTail):
        return UlmClass(UlmSequence((), InfTail()))
    return UlmClass(UlmSequence((), SuccTail(s.tail.base.limit_part)))


def class_sort_key(c: UlmClass):
    t = c.representative.tail
    if isinstance(t, InfTail):
        return (1, ())
    return (0, t.base.terms)


# -- text syntax -------------------------------------------------------------

_SEQ = re.compile(r"^\((.*)\|\s*(succ\s+(.+)|inf)\s*\)$")


def parse_sequence(text: str) -> UlmSequence:
    m = _SEQ.match(text.strip())
    if not m:
        raise ValueError(f"bad Ulm sequence {text!r}")
    body = m.group(1).strip()
    try:
        prefix = tuple(parse_height(t) for t in body.split(",")) if body else ()
        if m.group(2) == "inf":
            tail: Tail = InfTail()
        else:
            base = parse_height(m.group(3))
            if base is INF:
                raise ValueError("successor tail needs an ordinal base")
            tail = SuccTail(base)
    except OrdinalError as exc:
        raise ValueError(str(exc)) from exc
    return UlmSequence(prefix, tail)


def format_sequence(s: UlmSequence) -> str:
    body = ",".join(format_height(h) for h in s.prefix)
    if isinstance(s.tail, InfTail):
        return f"({body} | inf)" if body else "(| inf)"
    tail = f"succ {format_height(s.tail.base)}"
    return f"({body} | {tail})" if body else f"(| {tail})"
