"""Diagonal weight sequences lambda_i that define the inner product.

A scaling is parsed from a short descriptor string shared with the CLI::

    const:<c>       lambda_i = c
    power:<p>       lambda_i = i**(-p)
    geometric:<r>   lambda_i = r**i
    file:<path>     one positive decimal per line, line k holds lambda_k

Numbers may be written as plain decimals or as ``base^exponent``
(``geometric:2^-0.5``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

DEFAULT_CAP = 1e6


class ScalingError(ValueError):
    """Raised for malformed or unbounded scaling descriptors."""


def _parse_number(text: str) -> float:
    text = text.strip()
    try:
        if "^" in text:
            base, exponent = text.split("^", 1)
            return float(base) ** float(exponent)
        return float(text)
    except ValueError as exc:
        raise ScalingError(f"cannot parse number {text!r}") from exc


def _format_number(value: float) -> str:
    return f"{value:.17g}"


@dataclass(frozen=True)
class ScalingSequence:
    """Positive weights lambda_1, lambda_2, ... of one of four kinds.

    Instances are immutable and hashable so they can key caches.
    """

    kind: str
    param: float = 1.0
    values: tuple[float, ...] = ()
    cap: float = DEFAULT_CAP

    def __post_init__(self) -> None:
        if self.kind not in ("const", "power", "geometric", "explicit"):
            raise ScalingError(f"unknown scaling kind {self.kind!r}")
        if not math.isfinite(self.param):
            raise ScalingError("scaling parameter must be finite")
        if self.kind == "const" and self.param <= 0:
            raise ScalingError("const scaling needs c > 0")
        if self.kind == "power" and self.param < 0:
            raise ScalingError("power scaling needs p >= 0 (i**-p must stay bounded)")
        if self.kind == "geometric" and not (0 < self.param <= 1):
            raise ScalingError("geometric scaling needs 0 < r <= 1 (r**i must stay bounded)")
        if self.kind == "explicit":
            if not self.values:
                raise ScalingError("explicit scaling needs at least one value")
            if any(not (v > 0) or not math.isfinite(v) for v in self.values):
                raise ScalingError("explicit scaling values must be positive and finite")
        if self.sup() > self.cap:
            raise ScalingError(f"scaling exceeds cap {self.cap:g}")

    @classmethod
    def constant(cls, c: float = 1.0) -> "ScalingSequence":
        return cls("const", float(c))

    @classmethod
    def power(cls, p: float) -> "ScalingSequence":
        return cls("power", float(p))

    @classmethod
    def geometric(cls, r: float) -> "ScalingSequence":
        return cls("geometric", float(r))

    @classmethod
    def explicit(cls, values: Sequence[float], cap: float = DEFAULT_CAP) -> "ScalingSequence":
        return cls("explicit", 0.0, tuple(float(v) for v in values), cap)

    @classmethod
    def parse(cls, descriptor: str, cap: float = DEFAULT_CAP) -> "ScalingSequence":
        """Parse ``kind:value`` into a scaling."""
        kind, sep, arg = descriptor.strip().partition(":")
        if not sep or not arg:
            raise ScalingError(f"scaling descriptor must look like kind:value, got {descriptor!r}")
        kind = kind.strip().lower()
        if kind == "file":
            path = Path(arg.strip())
            try:
                lines = path.read_text().splitlines()
            except OSError as exc:
                raise ScalingError(f"cannot read scaling file {path}: {exc}") from exc
            values = [_parse_number(line) for line in lines if line.strip()]
            return cls.explicit(values, cap=cap)
        if kind not in ("const", "power", "geometric"):
            raise ScalingError(f"unknown scaling kind {kind!r}")
        return cls(kind, _parse_number(arg), (), cap)

    def __call__(self, i: int) -> float:
        if i < 1:
            raise IndexError(f"scaling index must be >= 1, got {i}")
        if self.kind == "const":
            return self.param
        if self.kind == "power":
            return float(i) ** (-self.param)
        if self.kind == "geometric":
            return self.param**i
        if i > len(self.values):
            raise IndexError(f"explicit scaling has {len(self.values)} values, index {i} requested")
        return self.values[i - 1]

    def sup(self) -> float:
        if self.kind == "const":
            return self.param
        if self.kind in ("power", "geometric"):
            # both sequences are non-increasing in i
            return self(1)
        return max(self.values)

    def tail_limit(self, q: int) -> float:
        """lim_{i -> oo} lambda_i**q, the per-step growth of the power sum.

        Explicit lists are finite, so their tail is taken as zero.
        """
        if self.kind == "const":
            return self.param**q
        if self.kind == "power":
            return 1.0 if self.param == 0 else 0.0
        if self.kind == "geometric":
            return 1.0 if self.param == 1 else 0.0
        return 0.0

    def power_sum(self, n: int, q: int, start: int = 1) -> float:
        """Compensated sum of lambda_l**q for l = start..n (empty sum is 0)."""
        if n < start:
            return 0.0
        return math.fsum(self(l) ** q for l in range(start, n + 1))

    @property
    def descriptor(self) -> str:
        """Descriptor string, used in reports."""
        if self.kind == "explicit":
            return "explicit:" + ",".join(_format_number(v) for v in self.values)
        return f"{self.kind}:{_format_number(self.param)}"

    def __str__(self) -> str:
        return self.descriptor


@dataclass(frozen=True)
class GeneralScaling:
    """Weights lambda_ij that need not factor as lambda_i * lambda_j.

    Only the non-closure counterexample uses this; unlisted pairs fall
    back to ``default``.
    """

    weights: Mapping[tuple[int, int], float]
    default: float = 1.0

    def __post_init__(self) -> None:
        if any(not (w > 0) for w in self.weights.values()) or not (self.default > 0):
            raise ScalingError("pair weights must be positive")

    def __call__(self, i: int, j: int) -> float:
        return self.weights.get((i, j), self.default)
