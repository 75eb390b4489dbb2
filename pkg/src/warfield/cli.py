"""Command line interface.

Exit codes: 0 success or equivalent, 1 distinguished or check failure,
2 malformed input, 3 stuck game (a bug), 4 unsupported division.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from pathlib import Path

from .backforth import HeightViolation, NotEquivalent, Stuck, run_game
from .classify import decide_equiv, profile
from .corpus import random_module
from .crosscheck import DEFAULT_TRUNCATION, oracle_check
from .forest import ForestError
from .io import FormatError, dumps, load, parse_element, parse_script
from .module_model import DivisionUnsupported, ModelError, realize_sequence, ulm_sequence_of
from .ordinal import format_height
from .ulmseq import format_sequence, is_admissible, normalize, parse_sequence

EXIT_OK, EXIT_DISTINGUISHED, EXIT_ERROR, EXIT_STUCK, EXIT_DIVISION = 0, 1, 2, 3, 4


def truncation_default() -> int:
    raw = os.environ.get("WARFIELD_TRUNCATION", str(DEFAULT_TRUNCATION))
    try:
        return int(raw)
    except ValueError:
        raise FormatError(f"WARFIELD_TRUNCATION must be an integer, got {raw!r}")


def cmd_invariants(args) -> int:
    G = load(args.file)
    print(profile(G).render())
    return EXIT_OK


def cmd_equiv(args) -> int:
    v = decide_equiv(load(args.file_a), load(args.file_b))
    print(v.render())
    return EXIT_OK if v.equivalent else EXIT_DISTINGUISHED


def _stdin_script(G, H):
    for line in sys.stdin:
        if line.strip():
            yield from parse_script(G, H, [line])


def cmd_witness(args) -> int:
    G, H = load(args.file_a), load(args.file_b)
    v = decide_equiv(G, H)
    if not v.equivalent:
        print(v.render())
        return EXIT_DISTINGUISHED
    if args.script:
        with open(args.script, encoding="utf-8") as fh:
            script = parse_script(G, H, fh)
    elif args.interactive:
        script = _stdin_script(G, H)
    else:
        script = None

    def show(rec):
        print(rec.render(args.detail), flush=True)

    try:
        trace = run_game(G, H, rounds=args.rounds, seed=args.seed, script=script, on_record=show if not args.detail else None)
        if args.detail:
            print(trace.render(detail=True))
    except (Stuck, HeightViolation) as exc:
        print(f"STUCK: {exc}")
        return EXIT_STUCK
    except DivisionUnsupported as exc:
        print(f"UNSUPPORTED: {exc}")
        return EXIT_DIVISION
    except NotEquivalent as exc:
        print(exc.verdict.render())
        return EXIT_DISTINGUISHED
    return EXIT_OK


def cmd_height(args) -> int:
    G = load(args.file)
    print(format_height(G.height(parse_element(G, args.expr))))
    return EXIT_OK


def cmd_ulmseq(args) -> int:
    G = load(args.file)
    x = parse_element(G, args.expr)
    if x.is_zero():
        raise FormatError("the zero element has no Ulm sequence worth printing")
    print(format_sequence(normalize(ulm_sequence_of(G, x))))
    return EXIT_OK


def cmd_realize(args) -> int:
    try:
        u = parse_sequence(args.sequence)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if not is_admissible(u):
        raise FormatError(f"{args.sequence} is not strictly increasing")
    G, _ = realize_sequence(u, args.p)
    sys.stdout.write(dumps(G))
    return EXIT_OK


def cmd_random(args) -> int:
    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        kind = args.cls
        if kind == "torsion":
            kind = rng.choice(["torsion", "torsion-families"])
        G = random_module(rng, kind)
        path = out / f"{args.cls}-{args.seed}-{i:03d}.json"
        path.write_text(dumps(G), encoding="utf-8")
        print(path)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    N = args.truncate if args.truncate is not None else truncation_default()
    status = EXIT_OK
    for path in args.files:
        report = oracle_check(load(path), N, args.seed)
        if len(args.files) > 1:
            print(f"== {path}")
        print(report.render())
        if not report.ok:
            status = EXIT_DISTINGUISHED
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warfield", description="Invariants and back-and-forth witnesses for modules over Z_(p).")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("invariants", help="print u_hat and w_hat")
    s.add_argument("file")
    s.set_defaults(run=cmd_invariants)

    s = sub.add_parser("equiv", help="decide equivalence of two modules")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.set_defaults(run=cmd_equiv)

    s = sub.add_parser("witness", help="play the back-and-forth game and print the trace")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.add_argument("--rounds", type=int, default=8)
    s.add_argument("--detail", action="store_true", help="also print every pair added to the map")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--script", help="challenge file, one 'L: expr' or 'R: expr' per line")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--interactive", action="store_true", help="read challenges from stdin")
    s.set_defaults(run=cmd_witness)

    s = sub.add_parser("height", help="height of an element")
    s.add_argument("file")
    s.add_argument("expr")
    s.set_defaults(run=cmd_height)

    s = sub.add_parser("ulmseq", help="Ulm sequence of a basis element or expression")
    s.add_argument("file")
    s.add_argument("expr", metavar="basis-name")
    s.set_defaults(run=cmd_ulmseq)

    s = sub.add_parser("realize", help="module file realizing an Ulm sequence")
    s.add_argument("sequence")
    s.add_argument("--p", type=int, default=2)
    s.set_defaults(run=cmd_realize)

    s = sub.add_parser("random", help="write random module files")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--class", dest="cls", choices=["torsion", "mixed", "gappy"], default="mixed")
    s.add_argument("--count", type=int, default=5)
    s.add_argument("--out", default="corpus")
    s.set_defaults(run=cmd_random)

    s = sub.add_parser("oracle-check", help="compare against the brute-force oracle")
    s.add_argument("files", nargs="+")
    s.add_argument("--truncate", type=int, default=None, help="defaults to WARFIELD_TRUNCATION or 6")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(run=cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (FormatError, ModelError, ForestError, ValueError) as exc:
        if isinstance(exc, DivisionUnsupported):
            print(f"UNSUPPORTED: {exc}", file=sys.stderr)
            return EXIT_DIVISION
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
