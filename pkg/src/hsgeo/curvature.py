"""Left-invariant geometry at the identity: connection, curvature and Ricci.

Everything is evaluated at a finite truncation N. Truncated Ricci sums run
over every admissible basis pair (k, m) with k, m <= N.

Two sets of closed forms are provided. ``ricci_closed_form`` and
``principal_curvature`` evaluate the published displays as written;
``ricci_closed_form_corrected`` and ``principal_curvature_corrected`` are
the expressions that agree with the brute-force composition for every
family (the general-family display is already correct and is shared).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from hsgeo.algebra import (
    AlgebraVector,
    Family,
    Index,
    IndexRangeError,
    InadmissibleIndexError,
    TruncatedAlgebra,
    basis_bracket,
)
from hsgeo.scaling import ScalingSequence

Coeffs = dict[Index, float]


class TruncationLevelError(IndexRangeError):
    """N must exceed every base index for the closed forms to apply."""


# -- sparse helpers over raw coefficient dicts ------------------------------------

def _axpy(out: Coeffs, c: float, vec: Coeffs) -> None:
    for k, v in vec.items():
        out[k] = out.get(k, 0.0) + c * v


def _bracket(fam: Family, lam: ScalingSequence, x: Coeffs, y: Coeffs) -> Coeffs:
    out: Coeffs = {}
    for a, xa in x.items():
        for b, yb in y.items():
            for idx, c in basis_bracket(fam, lam, a, b):
                out[idx] = out.get(idx, 0.0) + xa * yb * c
    return out


def _dot(x: Coeffs, y: Coeffs) -> float:
    if len(x) > len(y):
        x, y = y, x
    return math.fsum(v * y.get(k, 0.0) for k, v in x.items())


def _ad_star(fam: Family, lam: ScalingSequence, p: Index, q: Index) -> Coeffs:
    """ad*_{xi_p} xi_q = sum_b ([xi_p, xi_b], xi_q) xi_b.

    A nonzero pairing needs b to share indices with p and q, so the
    candidates are the admissible pairs built from those indices.
    """
    pool = sorted(set(p) | set(q))
    out: Coeffs = {}
    for s in pool:
        for t in pool:
            if not fam.admissible(s, t):
                continue
            for idx, c in basis_bracket(fam, lam, p, (s, t)):
                if idx == q:
                    out[(s, t)] = out.get((s, t), 0.0) + c
    return out


class ConnectionTable:
    """Memoized nabla_{xi_a} xi_b for one family and scaling.

    The entries never involve indices outside a and b, so one table serves
    every truncation level. Filling is guarded by a lock; reads of filled
    entries are lock-free.
    """

    def __init__(self, family: Family, scaling: ScalingSequence) -> None:
        self.family = family
        self.scaling = scaling
        self._table: dict[tuple[Index, Index], Coeffs] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._table)

    def get(self, a: Index, b: Index) -> Coeffs:
        hit = self._table.get((a, b))
        if hit is not None:
            return hit
        fam, lam = self.family, self.scaling
        out: Coeffs = {}
        for idx, c in basis_bracket(fam, lam, a, b):
            out[idx] = out.get(idx, 0.0) + 0.5 * c
        _axpy(out, -0.5, _ad_star(fam, lam, b, a))
        _axpy(out, -0.5, _ad_star(fam, lam, a, b))
        out = {k: v for k, v in out.items() if v != 0.0}
        with self._lock:
            return self._table.setdefault((a, b), out)

    def nabla(self, x: Coeffs, y: Coeffs) -> Coeffs:
        out: Coeffs = {}
        for a, xa in x.items():
            for b, yb in y.items():
                _axpy(out, xa * yb, self.get(a, b))
        return out

    def curvature(self, x: Coeffs, y: Coeffs, z: Coeffs) -> Coeffs:
        """R_xy z = nabla_[x,y] z - nabla_x nabla_y z + nabla_y nabla_x z."""
        out = self.nabla(_bracket(self.family, self.scaling, x, y), z)
        _axpy(out, -1.0, self.nabla(x, self.nabla(y, z)))
        _axpy(out, 1.0, self.nabla(y, self.nabla(x, z)))
        return out


_TABLES: dict[tuple[Family, ScalingSequence], ConnectionTable] = {}
_TABLES_LOCK = threading.Lock()


def connection_table(alg: TruncatedAlgebra) -> ConnectionTable:
    key = (alg.family, alg.scaling)
    with _TABLES_LOCK:
        table = _TABLES.get(key)
        if table is None:
            table = _TABLES[key] = ConnectionTable(*key)
        return table


def _wrap(alg: TruncatedAlgebra, coeffs: Coeffs) -> AlgebraVector:
    n = alg.N
    return AlgebraVector({k: v for k, v in coeffs.items() if max(k) <= n}, alg.family, alg.scaling)


# -- public operations -------------------------------------------------------------------

def levi_civita(x: AlgebraVector, y: AlgebraVector, alg: TruncatedAlgebra) -> AlgebraVector:
    """nabla_x y, fixed by (nabla_x y, z) = ([x,y],z) - ([y,z],x) + ([z,x],y) halved."""
    alg.check_vector(x)
    alg.check_vector(y)
    return _wrap(alg, connection_table(alg).nabla(dict(x.coeffs), dict(y.coeffs)))


def riemann(x: AlgebraVector, y: AlgebraVector, z: AlgebraVector, alg: TruncatedAlgebra) -> AlgebraVector:
    """R_xy z, restricted to indices <= N (a no-op for inputs inside the truncation)."""
    for v in (x, y, z):
        alg.check_vector(v)
    table = connection_table(alg)
    return _wrap(alg, table.curvature(dict(x.coeffs), dict(y.coeffs), dict(z.coeffs)))


def sectional(x: AlgebraVector, y: AlgebraVector, alg: TruncatedAlgebra) -> float:
    """K(x, y) = (R_xy x, y); meaningful as a curvature for orthonormal x, y."""
    alg.check_vector(x)
    alg.check_vector(y)
    xc, yc = dict(x.coeffs), dict(y.coeffs)
    return _dot(connection_table(alg).curvature(xc, yc, xc), yc)


def ricci_truncated(x: AlgebraVector, alg: TruncatedAlgebra) -> float:
    """R^N(x) = sum of K(x, xi_km) over all admissible pairs k, m <= N."""
    alg.check_vector(x)
    table = connection_table(alg)
    xc = dict(x.coeffs)
    parts = []
    for b in alg.basis_indices():
        parts.append(table.curvature(xc, {b: 1.0}, xc).get(b, 0.0))
    return math.fsum(parts)


def ricci_selfadjoint(x: AlgebraVector, alg: TruncatedAlgebra) -> AlgebraVector:
    """R-hat^N(x) = sum over basis pairs b of R_{xi_b, x} xi_b."""
    alg.check_vector(x)
    table = connection_table(alg)
    xc = dict(x.coeffs)
    acc: dict[Index, list[float]] = {}
    for b in alg.basis_indices():
        eb = {b: 1.0}
        for k, v in table.curvature(eb, xc, eb).items():
            acc.setdefault(k, []).append(v)
    return _wrap(alg, {k: math.fsum(vs) for k, vs in acc.items()})


# -- closed forms ----------------------------------------------------------------------------

def _check_pair(family: Family, i: int, j: int, N: int) -> None:
    if not family.admissible(i, j):
        raise InadmissibleIndexError(f"index ({i},{j}) is not admissible for {family}")
    if N <= max(i, j):
        raise TruncationLevelError(f"closed forms need N > max(i, j); got N={N} for ({i},{j})")


def ricci_closed_form(family: Family, i: int, j: int, N: int, scaling: ScalingSequence) -> float:
    """Truncated Ricci curvature R^N(xi_ij) from the published displays, verbatim."""
    _check_pair(family, i, j, N)
    lam = scaling
    li, lj = lam(i), lam(j)
    if family is Family.GENERAL:
        return _general_ricci(i, j, N, lam)
    if family is Family.ORTHOGONAL:
        s2 = lam.power_sum(N, 2)
        s4 = lam.power_sum(N, 4)
        a, b = li**2, lj**2
        return (-4 * a * b - 5 * (a - b) ** 2) * N / 8 + 3 * (a + b) * s2 / 8 + s4 / 4
    return _tri_principal_published(i, j, N, lam)


def _general_ricci(i: int, j: int, N: int, lam: ScalingSequence) -> float:
    d = 1.0 if i == j else 0.0
    li4, lj4 = lam(i) ** 4, lam(j) ** 4
    return (6 * d * li4 - 4 * d * li4 * N - 2 * li4 * N - 2 * lj4 * N + 2 * lam.power_sum(N, 4)) / 4


def _tri_principal_published(k: int, m: int, N: int, lam: ScalingSequence) -> float:
    lk4, lm4 = lam(k) ** 4, lam(m) ** 4
    return ((-3 * k + m + 4) * lk4 + (2 - k - 2 * N + 3 * m) * lm4
            + lam.power_sum(N, 4, start=k + 1) + lam.power_sum(m - 1, 4)) / 4


def ricci_closed_form_corrected(family: Family, i: int, j: int, N: int, scaling: ScalingSequence) -> float:
    """Truncated Ricci curvature R^N(xi_ij) in a form that matches direct composition.

    skew:        -(N-2)(l_i^2 - l_j^2)^2 / 4 + (sum_{l<=N} l_l^4 - l_i^4 - l_j^4) / 4
    triangular:  (sum_{i<l<j} l_l^4 - (i-1) l_i^4 - (N-j) l_j^4) / 2
    """
    _check_pair(family, i, j, N)
    lam = scaling
    if family is Family.GENERAL:
        return _general_ricci(i, j, N, lam)
    li4, lj4 = lam(i) ** 4, lam(j) ** 4
    if family is Family.ORTHOGONAL:
        diff = lam(i) ** 2 - lam(j) ** 2
        return -(N - 2) * diff * diff / 4 + (lam.power_sum(N, 4) - li4 - lj4) / 4
    inner_sum = lam.power_sum(j - 1, 4, start=i + 1)
    return (inner_sum - (i - 1) * li4 - (N - j) * lj4) / 2


def _require_diagonal_family(family: Family, k: int, m: int, N: int) -> None:
    if family is Family.GENERAL:
        raise ValueError("principal curvatures are defined here for the skew and triangular families only")
    _check_pair(family, k, m, N)


def principal_curvature(family: Family, k: int, m: int, N: int, scaling: ScalingSequence) -> float:
    """a_km with R-hat^N(xi_km) = a_km xi_km, from the published explicit expressions."""
    _require_diagonal_family(family, k, m, N)
    lam = scaling
    if family is Family.TRIANGULAR:
        return _tri_principal_published(k, m, N, lam)
    a, b = lam(k) ** 2, lam(m) ** 2
    sq = [lam(l) ** 2 for l in range(1, N + 1)]
    total = math.fsum([
        (k - 1) * (3 * a + b),
        -3 * (m - 1) * b * (b - a),
        (N - k) * a * (3 * b - 3 * a),
        (N - m) * (-a - 3 * b) * (b - a),
        math.fsum(2 * a * s + s * s - 2 * b * s for s in sq[: k - 1]),
        math.fsum(a * s for s in sq[k:]),
        math.fsum(b * s for s in sq[: m - 1]),
        math.fsum(s * (2 * b + s - 2 * a) for s in sq[m:]),
    ])
    return total / 8


def principal_curvature_corrected(family: Family, k: int, m: int, N: int, scaling: ScalingSequence) -> float:
    """a_km matching direct composition; by diagonality it equals R^N(xi_km)."""
    _require_diagonal_family(family, k, m, N)
    return ricci_closed_form_corrected(family, k, m, N, scaling)


CLOSED_FORMS = {"published": ricci_closed_form, "corrected": ricci_closed_form_corrected}
PRINCIPAL_FORMS = {"published": principal_curvature, "corrected": principal_curvature_corrected}


def predicted_slope(family: Family, i: int, j: int, scaling: ScalingSequence, formula: str = "published") -> float:
    """Large-N coefficient of N in the curve evaluated by :func:`curve_value`.

    For a square-summable scaling the power sums converge and this is

    general:     -delta_ij l_i^4 - (l_i^4 + l_j^4) / 2 (both formulas)
    skew:        (2 l_k^2 - 3 l_m^2)(l_m^2 - l_k^2) / 8 published, -(l_k^2 - l_m^2)^2 / 4 corrected
    triangular:  -l_m^4 / 2 (both formulas)

    Otherwise the limits r_q = lim l_N^q add the growth of each power sum.
    """
    li, lj = scaling(i), scaling(j)
    r2, r4 = scaling.tail_limit(2), scaling.tail_limit(4)
    if family is Family.GENERAL:
        return -(li**4 if i == j else 0.0) - (li**4 + lj**4) / 2 + r4 / 2
    if family is Family.TRIANGULAR:
        return -(lj**4) / 2 + (r4 / 4 if formula == "published" else 0.0)
    a, b = li**2, lj**2
    if formula == "published":
        return ((2 * a - 3 * b) * (b - a) + a * r2 + 2 * (b - a) * r2 + r4) / 8
    return -((a - b) ** 2) / 4 + r4 / 4


def divergence_verdict(slope: float, tol: float = 1e-12) -> str:
    if slope < -tol:
        return "-inf"
    if slope > tol:
        return "+inf"
    return "bounded"


@dataclass(frozen=True)
class PrincipalCurve:
    """Samples (N, a_km(N)) and a least-squares line over a window of them."""

    family: Family
    k: int
    m: int
    samples: tuple[tuple[int, float], ...]
    slope: float
    intercept: float
    window: tuple[int, int]
    predicted: float
    formula: str = "published"

    def __post_init__(self) -> None:
        ns = [n for n, _ in self.samples]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("curve samples must have strictly increasing N")

    @property
    def verdict(self) -> str:
        return divergence_verdict(self.slope)

    def to_csv(self) -> str:
        lines = ["N,a_km"] + [f"{n},{v:.17g}" for n, v in self.samples]
        return "\n".join(lines) + "\n"

    def fit_record(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "window": list(self.window)}


def curve_value(family: Family, k: int, m: int, N: int, scaling: ScalingSequence, formula: str = "published") -> float:
    """a_km(N) for skew/triangular, R^N(xi_km) for the general family."""
    if family is Family.GENERAL:
        return CLOSED_FORMS[formula](family, k, m, N, scaling)
    return PRINCIPAL_FORMS[formula](family, k, m, N, scaling)


def asymptotic_sweep(family: Family, k: int, m: int, scaling: ScalingSequence, N_grid: Iterable[int],
                     formula: str = "published", fit_from: int | None = None) -> PrincipalCurve:
    """Evaluate the curve on ``N_grid`` and fit a line.

    The fit uses samples with N >= ``fit_from``, or the top half of the
    grid when it is not given.
    """
    grid = sorted(set(int(n) for n in N_grid))
    if not grid:
        raise ValueError("N grid is empty")
    if grid[0] <= max(k, m):
        raise TruncationLevelError(f"sweep grid must start above max(k, m) = {max(k, m)}")
    samples = tuple((n, curve_value(family, k, m, n, scaling, formula)) for n in grid)
    if fit_from is None:
        window = samples[len(samples) // 2:]
    else:
        window = tuple(s for s in samples if s[0] >= fit_from)
    if len(window) < 2:
        window = samples[-2:] if len(samples) >= 2 else samples
    if len(window) < 2:
        raise ValueError("need at least two samples to fit a slope")
    ns = np.array([n for n, _ in window], dtype=float)
    vs = np.array([v for _, v in window])
    # centring keeps the normal equations well conditioned
    centre = ns.mean()
    slope, c0 = np.polyfit(ns - centre, vs, 1)
    intercept = c0 - slope * centre
    return PrincipalCurve(family, k, m, samples, float(slope), float(intercept),
                          (window[0][0], window[-1][0]), predicted_slope(family, k, m, scaling, formula), formula)


def selfadjoint_matrix(alg: TruncatedAlgebra, indices: Sequence[Index] | None = None) -> np.ndarray:
    """Rows are R-hat^N(xi_b) in basis coordinates, for b in ``indices`` (default: full basis)."""
    picks = alg.basis_indices() if indices is None else list(indices)
    return np.array([alg.to_array(ricci_selfadjoint(alg.xi(*b), alg)) for b in picks])
