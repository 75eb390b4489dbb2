"""Fixed games whose detailed traces are kept as regression files."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .backforth import run_game
from .classify import profile
from .corpus import random_pair


@dataclass(frozen=True)
class GoldenCase:
    name: str
    kind: str
    seed: int
    rounds: int = 8


# seeds picked so that every extension strategy shows up; spines drive the infinity branch
CASES = (
    GoldenCase("spine-a", "torsion-families", 4),
    GoldenCase("spine-b", "torsion-families", 7),
    GoldenCase("spine-c", "torsion-families", 28),
    GoldenCase("families-a", "torsion-families", 2),
    GoldenCase("families-b", "torsion-families", 11),
    GoldenCase("mixed-a", "mixed", 0),
    GoldenCase("mixed-b", "mixed", 9),
    GoldenCase("mixed-c", "mixed", 10),
    GoldenCase("gappy-a", "gappy", 0),
    GoldenCase("gappy-b", "gappy", 1),
    GoldenCase("gappy-c", "gappy", 6),
)


def build_pair(case: GoldenCase):
    return random_pair(random.Random(case.seed), True, case.kind)


def render_case(case: GoldenCase) -> str:
    G, H = build_pair(case)
    trace = run_game(G, H, rounds=case.rounds, seed=case.seed)
    lines = [f"# {case.name}: {case.kind} pair, seed {case.seed}, {case.rounds} rounds", "# profile"]
    lines += [f"#   {line}" for line in profile(G).lines()]
    lines.append(trace.render(detail=True))
    return "\n".join(lines) + "\n"


def tally(case: GoldenCase) -> dict[str, int]:
    G, H = build_pair(case)
    return run_game(G, H, rounds=case.rounds, seed=case.seed).strategy_counts()
