"""One PASS/FAIL line per acceptance criterion, echoed in the pytest summary."""

import time
from contextlib import contextmanager

LINES: list[str] = []


@contextmanager
def criterion(number: int, title: str, limit: float):
    info = {"summary": ""}
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield info
        elapsed = time.perf_counter() - start
        assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        line = f"criterion {number:2d} {status} | {title} | {elapsed:.1f}s of {limit:g}s | {info['summary']}"
        LINES.append(line)
        print(line)
