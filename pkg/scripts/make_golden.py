"""Regenerate the golden witness traces under tests/golden/."""

import argparse
from pathlib import Path

from warfield.golden import CASES, render_case

OUT = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for case in CASES:
        path = args.out / f"{case.name}.txt"
        path.write_text(render_case(case), encoding="utf-8")
        print(path)


if __name__ == "__main__":
    main()
