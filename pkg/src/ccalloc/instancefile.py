"""Versioned text format for problem instances.

Layout (see docs/formats.md for the full grammar):

    ccalloc-instance v1
    n 3
    m 2
    k 2
    mode optional-reject
    capacities 3 3
    confidence 0.65000000000000002 0.94999999999999996
    request 1
    revenue <k numbers>
    mean <k numbers>          # m lines, resource order
    var <k numbers>           # m lines, resource order
    request 2
    ...

Numbers are written with 17 significant digits, so parse(emit(x))
reproduces every float bit-for-bit.  Text was chosen over binary to keep
instances diffable and hand-editable for adversarial cases.
"""

from __future__ import annotations

import numpy as np

from .core import Instance, MUST_ASSIGN, OPTIONAL_REJECT, Request

__all__ = ["FORMAT_VERSION", "InstanceFormatError", "emit", "parse", "read", "write"]

FORMAT_VERSION = "v1"
_MAGIC = "ccalloc-instance"
_MODES = (OPTIONAL_REJECT, MUST_ASSIGN)


class InstanceFormatError(ValueError):
    """Malformed instance text; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.atleast_1d(values))


def emit(instance: Instance) -> str:
    out = [f"{_MAGIC} {FORMAT_VERSION}"]
    out.append(f"n {instance.n}")
    out.append(f"m {instance.m}")
    out.append(f"k {instance.k}")
    out.append(f"mode {instance.assignment_mode}")
    out.append(f"capacities {_fmt(instance.capacities)}")
    out.append(f"confidence {_fmt(instance.confidence)}")
    for t, req in enumerate(instance.requests, start=1):
        out.append(f"request {t}")
        out.append(f"revenue {_fmt(req.revenue)}")
        for j in range(instance.m):
            out.append(f"mean {_fmt(req.mean_consumption[j])}")
        for j in range(instance.m):
            out.append(f"var {_fmt(req.var_diag[j])}")
    return "\n".join(out) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    @property
    def line_no(self) -> int:
        return self.pos  # pos already advanced past the returned line

    def next(self, expect: str) -> list[str]:
        while self.pos < len(self.lines):
            raw = self.lines[self.pos]
            self.pos += 1
            stripped = raw.strip()
            if stripped:
                parts = stripped.split()
                if parts[0] != expect:
                    raise InstanceFormatError(
                        f"expected {expect!r}, found {parts[0]!r}", self.pos)
                return parts[1:]
        raise InstanceFormatError(f"unexpected end of file, expected {expect!r}",
                                  len(self.lines) + 1)

    def floats(self, expect: str, count: int) -> np.ndarray:
        parts = self.next(expect)
        if len(parts) != count:
            raise InstanceFormatError(
                f"{expect} needs {count} values, found {len(parts)}", self.pos)
        try:
            return np.array([float(p) for p in parts])
        except ValueError as exc:
            raise InstanceFormatError(f"bad number in {expect}: {exc}", self.pos)

    def integer(self, expect: str) -> int:
        parts = self.next(expect)
        if len(parts) != 1:
            raise InstanceFormatError(f"{expect} needs one value", self.pos)
        try:
            return int(parts[0])
        except ValueError:
            raise InstanceFormatError(f"bad integer in {expect}: {parts[0]!r}", self.pos)


def parse(text: str) -> Instance:
    r = _Reader(text)
    header = r.next(_MAGIC)
    if header != [FORMAT_VERSION]:
        raise InstanceFormatError(
            f"unsupported version {' '.join(header)!r}, expected {FORMAT_VERSION!r}",
            r.pos)
    n = r.integer("n")
    m = r.integer("m")
    k = r.integer("k")
    if n < 0 or m < 1 or k < 1:
        raise InstanceFormatError(f"bad dimensions n={n} m={m} k={k}", r.pos)
    mode_parts = r.next("mode")
    if len(mode_parts) != 1 or mode_parts[0] not in _MODES:
        raise InstanceFormatError(
            f"mode must be one of {_MODES}, found {' '.join(mode_parts)!r}", r.pos)
    mode = mode_parts[0]
    capacities = r.floats("capacities", m)
    confidence = r.floats("confidence", m)
    requests = []
    for t in range(1, n + 1):
        idx = r.integer("request")
        if idx != t:
            raise InstanceFormatError(f"request blocks out of order: found {idx}, "
                                      f"expected {t}", r.pos)
        revenue = r.floats("revenue", k)
        mean = np.stack([r.floats("mean", k) for _ in range(m)])
        var = np.stack([r.floats("var", k) for _ in range(m)])
        requests.append(Request(revenue, mean, var))
    # anything non-blank after the last block is a format error
    while r.pos < len(r.lines):
        if r.lines[r.pos].strip():
            raise InstanceFormatError(
                f"unexpected trailing content {r.lines[r.pos].strip()!r}", r.pos + 1)
        r.pos += 1
    return Instance(n=n, m=m, k=k, capacities=capacities, confidence=confidence,
                    requests=tuple(requests), assignment_mode=mode)


def write(instance: Instance, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(emit(instance))


def read(path) -> Instance:
    with open(path, "r", encoding="ascii") as fh:
        return parse(fh.read())
