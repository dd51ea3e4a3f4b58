"""Exponential and logarithm toolkit for truncated operator groups.

Matrix exponential, the Mercator series logarithm, truncated BCDH
composition, the log-derivative series, chord-log path length and the
metric comparison constant.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.special

from hsgeo.algebra import AlgebraVector, TruncatedAlgebra, bracket, norm

LOG_TERM_TOL = 1e-15
LOG_MAX_TERMS = 200
LOG_DOMAIN_MARGIN = 1e-6
MAX_BCDH_ORDER = 6


class LogDomainError(ValueError):
    """The Mercator series is not safely convergent at this point."""


@dataclass(frozen=True, eq=False)
class GroupElement:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"group element must be a square matrix, got shape {m.shape}")
        if not np.isfinite(np.linalg.cond(m)):
            raise ValueError("group element is singular")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    def inverse(self) -> "GroupElement":
        return GroupElement(np.linalg.inv(self.matrix))

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix)


def _as_matrix(g) -> np.ndarray:
    return g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)


def operator_norm(m: np.ndarray) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(m, 2))


def exp_matrix(x: AlgebraVector, alg: TruncatedAlgebra) -> GroupElement:
    return GroupElement(scipy.linalg.expm(alg.embed(x)))


def log_matrix(g) -> np.ndarray:
    """sum_{n>=1} (-1)**(n-1) (g - I)**n / n, for ||g - I|| < 1."""
    m = _as_matrix(g)
    d = m - np.eye(m.shape[0])
    dist = operator_norm(d)
    if dist >= 1.0 - LOG_DOMAIN_MARGIN:
        raise LogDomainError(f"||g - I|| = {dist:.6g} is outside the log series domain")
    out = np.zeros_like(d)
    power = np.eye(m.shape[0])
    for n in range(1, LOG_MAX_TERMS + 1):
        power = power @ d
        term = power / n
        out += term if n % 2 else -term
        if np.linalg.norm(term) < LOG_TERM_TOL:
            break
    return out


def log_vector(g, alg: TruncatedAlgebra, tol: float | None = 1e-8) -> AlgebraVector:
    return alg.project(log_matrix(g), tol=tol)


# -- BCDH -------------------------------------------------------------------------

@dataclass(frozen=True)
class BCDHTerm:
    """One (p_1, q_1, ..., p_m, q_m) summand of the BCDH series."""

    pq: tuple[tuple[int, int], ...]
    coefficient: Fraction

    @property
    def m(self) -> int:
        return len(self.pq)

    @property
    def degree(self) -> int:
        return sum(p + q for p, q in self.pq)

    @property
    def word(self) -> str:
        return "".join("x" * p + "y" * q for p, q in self.pq)

    @staticmethod
    def coefficient_for(pq: Sequence[tuple[int, int]]) -> Fraction:
        m = len(pq)
        n = sum(p + q for p, q in pq)
        denom = m * n
        for p, q in pq:
            denom *= math.factorial(p) * math.factorial(q)
        return Fraction((-1) ** (m - 1), denom)


def _compositions(budget: int):
    """Non-empty sequences of (p, q), p + q >= 1, total degree <= budget."""
    pairs = [(p, q) for p in range(budget + 1) for q in range(budget + 1) if 1 <= p + q <= budget]
    for p, q in pairs:
        head = ((p, q),)
        yield head
        for tail in _compositions(budget - p - q):
            yield head + tail


@lru_cache(maxsize=None)
def bcdh_terms(order: int) -> tuple[BCDHTerm, ...]:
    """All summands of total degree <= order, in generation order."""
    _check_order(order)
    return tuple(BCDHTerm(pq, BCDHTerm.coefficient_for(pq)) for pq in _compositions(order))


@lru_cache(maxsize=None)
def bcdh_word_coefficients(order: int) -> tuple[tuple[str, Fraction], ...]:
    """Summed coefficient per word, zero totals and vanishing words dropped.

    Words are bracketed left-normed, [...[[w1, w2], w3], ...], so any word
    whose first two letters coincide is identically zero.
    """
    totals: dict[str, Fraction] = {}
    for term in bcdh_terms(order):
        w = term.word
        if len(w) >= 2 and w[0] == w[1]:
            continue
        totals[w] = totals.get(w, Fraction(0)) + term.coefficient
    return tuple(sorted(((w, c) for w, c in totals.items() if c != 0), key=lambda wc: (len(wc[0]), wc[0])))


def _check_order(order: int) -> None:
    if not (1 <= order <= MAX_BCDH_ORDER):
        raise ValueError(f"BCDH order must be in [1, {MAX_BCDH_ORDER}], got {order}")


def left_normed_bracket(word: str, x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
    letters = {"x": x, "y": y}
    out = letters[word[0]]
    for ch in word[1:]:
        out = bracket(out, letters[ch])
    return out


def bcdh_truncated(x: AlgebraVector, y: AlgebraVector, order: int) -> AlgebraVector:
    """log(exp x exp y) through total degree ``order`` (1..6)."""
    _check_order(order)
    x._check(y)
    out = x._like({})
    cache: dict[str, AlgebraVector] = {}
    for word, coef in bcdh_word_coefficients(order):
        # reuse the bracket of the word's prefix
        prefix = word[:-1]
        if len(word) == 1:
            val = x if word == "x" else y
        elif prefix in cache:
            val = bracket(cache[prefix], x if word[-1] == "x" else y)
        else:
            val = left_normed_bracket(word, x, y)
        cache[word] = val
        out = out + float(coef) * val
    return out


def bcdh_remainder(x: AlgebraVector, y: AlgebraVector, order: int, alg: TruncatedAlgebra) -> float:
    """Frobenius norm of exp(bcdh(x, y)) - exp(x) exp(y)."""
    z = bcdh_truncated(x, y, order)
    lhs = scipy.linalg.expm(alg.embed(z))
    rhs = scipy.linalg.expm(alg.embed(x)) @ scipy.linalg.expm(alg.embed(y))
    return float(np.linalg.norm(lhs - rhs))


# -- log-derivative series ----------------------------------------------------------

def f_series(x: AlgebraVector, A: AlgebraVector, max_terms: int = 30) -> AlgebraVector:
    """A + [x,A]/2 - sum_{p=1}^{max_terms} [...[[x,A],x],...,x] / (2 (p+2) p!).

    The p-th nested bracket has p trailing x's. Summation stops once a term
    drops below 1e-15 in norm.
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    nested = bracket(x, A)
    out = A + 0.5 * nested
    for p in range(1, max_terms + 1):
        nested = bracket(nested, x)
        term = nested * (1.0 / (2 * (p + 2) * math.factorial(p)))
        out = out - term
        if norm(term) < 1e-15:
            break
    return out


def dlog_series(x: AlgebraVector, A: AlgebraVector, max_terms: int = 30) -> AlgebraVector:
    """(ad x / (1 - exp(-ad x))) A = sum_n (-1)**n B_n / n! (ad x)**n A.

    This is the exact right-hand side of d/dt log g(t) in terms of
    A = g**-1 dg/dt; it differs from :func:`f_series` from the
    (ad x)**2 term on (coefficient 1/12 here, 1/6 there).
    """
    if max_terms < 1:
        raise ValueError("max_terms must be >= 1")
    bern = scipy.special.bernoulli(max_terms)
    out = A
    power = A
    for n in range(1, max_terms + 1):
        power = bracket(x, power)
        if power.is_zero():
            break
        if bern[n] != 0.0:
            out = out + ((-1) ** n * bern[n] / math.factorial(n)) * power
        # |B_n / n!| <= 4 / (2 pi)**n bounds every later coefficient
        if norm(power) * 4.0 / (2.0 * math.pi) ** n < 1e-17:
            break
    return out


RHS_SERIES: dict[str, Callable[[AlgebraVector, AlgebraVector, int], AlgebraVector]] = {
    "published": f_series,
    "dlog": dlog_series,
}


# -- paths ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathSample:
    """Group elements g(t_k) on an increasing grid 0 = t_0 < ... < t_K = 1."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("a path needs at least two sample times")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if not (math.isclose(t[0], 0.0, abs_tol=1e-15) and math.isclose(t[-1], 1.0, abs_tol=1e-12)):
            raise ValueError("sample times must run from 0 to 1")
        if pts.ndim != 3 or pts.shape[0] != len(t) or pts.shape[1] != pts.shape[2]:
            raise ValueError(f"points must have shape (K+1, N, N), got {pts.shape}")
        t.setflags(write=False)
        pts.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_function(cls, fn: Callable[[float], np.ndarray], K: int) -> "PathSample":
        times = np.linspace(0.0, 1.0, K + 1)
        return cls(times, np.array([_as_matrix(fn(t)) for t in times]))

    @property
    def N(self) -> int:
        return self.points.shape[1]

    def reversed(self) -> "PathSample":
        return PathSample(1.0 - self.times[::-1], self.points[::-1])


def one_parameter_path(x: AlgebraVector, alg: TruncatedAlgebra, K: int) -> PathSample:
    """Samples of t -> exp(t x)."""
    X = alg.embed(x)
    return PathSample.from_function(lambda t: scipy.linalg.expm(t * X), K)


def log_derivative_residual(path: PathSample, alg: TruncatedAlgebra, series: str = "published",
                            max_terms: int = 30) -> float:
    """max over interior samples of |dh/dt - F(h, A)| with h = log g, A = g^-1 dg/dt.

    Both derivatives are taken by second-order finite differences on the
    sample grid. ``series`` picks F: "published" for :func:`f_series`, "dlog"
    for :func:`dlog_series`.
    """
    try:
        rhs = RHS_SERIES[series]
    except KeyError:
        raise ValueError(f"unknown series {series!r}; expected one of {sorted(RHS_SERIES)}") from None
    t = path.times
    pts = path.points
    h = np.array([alg.to_array(log_vector(g, alg)) for g in pts])
    steps = np.diff(t)
    # a uniform grid gets a scalar spacing so constant samples difference to exactly zero
    spacing = steps.mean() if np.allclose(steps, steps.mean(), rtol=1e-12, atol=0) else t
    hdot = np.gradient(h, spacing, axis=0, edge_order=2)
    gdot = np.gradient(pts, spacing, axis=0, edge_order=2)
    worst = 0.0
    for k in range(1, len(t) - 1):
        A = alg.project(np.linalg.solve(pts[k], gdot[k]), tol=None)
        F = rhs(alg.from_array(h[k]), A, max_terms)
        worst = max(worst, float(np.linalg.norm(hdot[k] - alg.to_array(F))))
    return worst


def path_length(path: PathSample, alg: TruncatedAlgebra) -> float:
    """sum_k |log(g(t_{k-1})^-1 g(t_k))| in the algebra norm."""
    pts = path.points
    pieces = []
    for k in range(1, len(pts)):
        step = np.linalg.solve(pts[k - 1], pts[k])
        pieces.append(norm(log_vector(step, alg)))
    return math.fsum(pieces)


def metric_constant(C: float, L: float) -> float:
    """sum_{k>=1} C**k L**(k-1) / ((k+1)! (k+1)), summed to machine precision."""
    if C < 0:
        raise ValueError("C must be >= 0")
    if C == 0.0:
        return 0.0
    if not (0 < L < math.log(2) / (2 * C)):
        warnings.warn(f"L={L} is outside (0, ln2/(2C)) = (0, {math.log(2) / (2 * C):.6g})", stacklevel=2)
    terms = []
    for k in itertools.count(1):
        term = C**k * L ** (k - 1) / (math.factorial(k + 1) * (k + 1))
        terms.append(term)
        if term <= 1e-17 * terms[0] or k > 500:
            break
    return math.fsum(terms)


# -- matrix exchange format ------------------------------------------------------------

def matrix_to_json(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("only square matrices can be exported")
    return json.dumps({"n": m.shape[0], "rows": [[float(v) for v in row] for row in m]})


def matrix_from_json(text: str) -> np.ndarray:
    try:
        obj = json.loads(text)
        n = int(obj["n"])
        rows = obj["rows"]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from exc
    m = np.array(rows, dtype=float)
    if m.shape != (n, n):
        raise ValueError(f"matrix JSON declares n={n} but rows have shape {m.shape}")
    return m
