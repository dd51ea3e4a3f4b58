"""Weighted Hilbert-Schmidt Lie algebras with a diagonal scaling.

Three families are supported, each with the orthonormal basis
xi_ij = lambda_i lambda_j e_ij (general, upper triangular) or
xi_ij = lambda_i lambda_j (e_ij - e_ji) / sqrt(2) (skew-symmetric).
Vectors are sparse coefficient maps over that basis, so the norm of a
vector is the Euclidean norm of its coefficients.

Basis order is part of the contract: general pairs are sorted by (i, j),
skew and triangular pairs by (j, i).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

import numpy as np

from hsgeo.scaling import GeneralScaling, ScalingSequence

SQRT2 = math.sqrt(2.0)

Index = tuple[int, int]


class AlgebraError(ValueError):
    """Base class for algebra-level contract violations."""


class FamilyMismatchError(AlgebraError):
    pass


class InadmissibleIndexError(AlgebraError):
    pass


class IndexRangeError(AlgebraError):
    pass


class Family(enum.Enum):
    GENERAL = "gl"
    ORTHOGONAL = "so"
    TRIANGULAR = "tri"

    @classmethod
    def parse(cls, name: str) -> "Family":
        aliases = {
            "gl": cls.GENERAL, "general": cls.GENERAL, "generalhs": cls.GENERAL,
            "so": cls.ORTHOGONAL, "orthogonal": cls.ORTHOGONAL, "orthogonalhs": cls.ORTHOGONAL,
            "tri": cls.TRIANGULAR, "triangular": cls.TRIANGULAR, "triangularhs": cls.TRIANGULAR,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown family {name!r}; expected gl, so or tri") from None

    def admissible(self, i: int, j: int) -> bool:
        if i < 1 or j < 1:
            return False
        return True if self is Family.GENERAL else i < j

    def dimension(self, n: int) -> int:
        return n * n if self is Family.GENERAL else n * (n - 1) // 2

    def __str__(self) -> str:
        return self.value


def _freeze(coeffs: Mapping[Index, float]) -> Mapping[Index, float]:
    return MappingProxyType({k: float(v) for k, v in coeffs.items() if v != 0.0})


@dataclass(frozen=True, eq=False)
class AlgebraVector:
    """Finite sparse combination of basis vectors xi_ij."""

    coeffs: Mapping[Index, float]
    family: Family
    scaling: ScalingSequence

    # keep numpy scalars from broadcasting over the vector
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        for (i, j) in self.coeffs:
            if not self.family.admissible(i, j):
                raise InadmissibleIndexError(f"index ({i},{j}) is not admissible for {self.family}")
        object.__setattr__(self, "coeffs", _freeze(self.coeffs))

    @classmethod
    def basis(cls, family: Family, scaling: ScalingSequence, i: int, j: int) -> "AlgebraVector":
        return cls({(i, j): 1.0}, family, scaling)

    def _check(self, other: "AlgebraVector") -> None:
        if self.family is not other.family or self.scaling != other.scaling:
            raise FamilyMismatchError(
                f"vectors live in different algebras: {self.family}/{self.scaling} "
                f"vs {other.family}/{other.scaling}"
            )

    def _like(self, coeffs: Mapping[Index, float]) -> "AlgebraVector":
        return AlgebraVector(coeffs, self.family, self.scaling)

    def __getitem__(self, index: Index) -> float:
        return self.coeffs.get(index, 0.0)

    def __iter__(self) -> Iterator[Index]:
        return iter(self.coeffs)

    def items(self):
        return self.coeffs.items()

    def __len__(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "AlgebraVector") -> "AlgebraVector":
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return self._like(out)

    def __sub__(self, other: "AlgebraVector") -> "AlgebraVector":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "AlgebraVector":
        scalar = float(scalar)
        return self._like({k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "AlgebraVector":
        return self * -1.0

    def __truediv__(self, scalar: float) -> "AlgebraVector":
        return self * (1.0 / scalar)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlgebraVector):
            return NotImplemented
        return (self.family is other.family and self.scaling == other.scaling
                and dict(self.coeffs) == dict(other.coeffs))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v:.6g}" for k, v in sorted(self.coeffs.items()))
        return f"AlgebraVector({self.family}, {{{body}}})"

    @property
    def max_index(self) -> int:
        return max((max(k) for k in self.coeffs), default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def allclose(self, other: "AlgebraVector", rtol: float = 1e-12, atol: float = 1e-14) -> bool:
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[k] - other[k]) <= atol + rtol * max(abs(self[k]), abs(other[k])) for k in keys)

    def restrict(self, n: int) -> "AlgebraVector":
        """Drop coefficients with an index above ``n``."""
        return self._like({k: v for k, v in self.coeffs.items() if max(k) <= n})


def linear_combination(terms: Iterable[tuple[float, AlgebraVector]], family: Family,
                       scaling: ScalingSequence) -> AlgebraVector:
    out: dict[Index, float] = {}
    for c, vec in terms:
        if vec.family is not family or vec.scaling != scaling:
            raise FamilyMismatchError("mixed algebras in linear combination")
        for k, v in vec.coeffs.items():
            out[k] = out.get(k, 0.0) + c * v
    return AlgebraVector(out, family, scaling)


# -- brackets -----------------------------------------------------------------

@lru_cache(maxsize=None)
def basis_bracket(family: Family, scaling: ScalingSequence, a: Index, b: Index) -> tuple[tuple[Index, float], ...]:
    """[xi_a, xi_b] as ((index, coefficient), ...), zero coefficients dropped."""
    i, j = a
    k, m = b
    lam = scaling
    terms: dict[Index, float] = {}

    def add(p: int, q: int, c: float) -> None:
        # basis vectors with an inadmissible index pair are zero
        if c != 0.0 and family.admissible(p, q):
            terms[(p, q)] = terms.get((p, q), 0.0) + c

    if family is Family.ORTHOGONAL:
        s = 1.0 / SQRT2
        if j == k:
            add(i, m, s * lam(j) ** 2)
        if j == m:
            add(k, i, s * lam(j) ** 2)
            add(i, k, -s * lam(j) ** 2)
        if i == k:
            add(m, j, s * lam(i) ** 2)
            add(j, m, -s * lam(i) ** 2)
        if i == m:
            add(k, j, -s * lam(i) ** 2)
    else:
        if j == k:
            add(i, m, lam(j) ** 2)
        if i == m:
            add(k, j, -lam(i) ** 2)
    return tuple((idx, c) for idx, c in terms.items() if c != 0.0)


def bracket(x: AlgebraVector, y: AlgebraVector) -> AlgebraVector:
    """Lie bracket, the bilinear extension of the basis formulas."""
    x._check(y)
    out: dict[Index, float] = {}
    for a, xa in x.coeffs.items():
        for b, yb in y.coeffs.items():
            for idx, c in basis_bracket(x.family, x.scaling, a, b):
                out[idx] = out.get(idx, 0.0) + xa * yb * c
    return x._like(out)


def inner(x: AlgebraVector, y: AlgebraVector) -> float:
    x._check(y)
    small, big = (x, y) if len(x) <= len(y) else (y, x)
    return math.fsum(v * big[k] for k, v in small.coeffs.items())


def norm(x: AlgebraVector) -> float:
    return math.sqrt(math.fsum(v * v for v in x.coeffs.values()))


def bracket_bound_ratio(x: AlgebraVector, y: AlgebraVector) -> float:
    """|[x,y]| / (|x||y|); compare against 2 sup lambda_i**2."""
    nx, ny = norm(x), norm(y)
    if nx == 0.0 or ny == 0.0:
        raise ValueError("bracket_bound_ratio needs nonzero vectors")
    return norm(bracket(x, y)) / (nx * ny)


# -- truncated algebra ----------------------------------------------------------

@dataclass(frozen=True)
class TruncatedAlgebra:
    """One family with a scaling, cut off at matrix size N."""

    family: Family
    scaling: ScalingSequence
    N: int
    _basis: tuple[Index, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("truncation level N must be >= 1")
        n = self.N
        if self.family is Family.GENERAL:
            basis = tuple((i, j) for i in range(1, n + 1) for j in range(1, n + 1))
        else:
            basis = tuple((i, j) for j in range(1, n + 1) for i in range(1, j))
        object.__setattr__(self, "_basis", basis)

    @classmethod
    def from_descriptor(cls, family: str, scaling: str, N: int) -> "TruncatedAlgebra":
        return cls(Family.parse(family), ScalingSequence.parse(scaling), N)

    @property
    def dim(self) -> int:
        return len(self._basis)

    def basis_indices(self) -> list[Index]:
        return list(self._basis)

    def position(self, index: Index) -> int:
        return self._basis.index(index)

    def xi(self, i: int, j: int) -> AlgebraVector:
        self.check_index((i, j))
        return AlgebraVector.basis(self.family, self.scaling, i, j)

    def basis_vectors(self) -> list[AlgebraVector]:
        return [AlgebraVector.basis(self.family, self.scaling, i, j) for i, j in self._basis]

    def vector(self, coeffs: Mapping[Index, float]) -> AlgebraVector:
        v = AlgebraVector(coeffs, self.family, self.scaling)
        self.check_vector(v)
        return v

    def zero(self) -> AlgebraVector:
        return AlgebraVector({}, self.family, self.scaling)

    def from_array(self, values: np.ndarray) -> AlgebraVector:
        return self.vector(dict(zip(self._basis, map(float, values))))

    def to_array(self, x: AlgebraVector) -> np.ndarray:
        self.check_vector(x)
        return np.array([x[b] for b in self._basis])

    def check_index(self, index: Index) -> None:
        i, j = index
        if not self.family.admissible(i, j):
            raise InadmissibleIndexError(f"index ({i},{j}) is not admissible for {self.family}")
        if max(i, j) > self.N:
            raise IndexRangeError(f"index ({i},{j}) exceeds truncation N={self.N}")

    def check_vector(self, x: AlgebraVector) -> None:
        if x.family is not self.family or x.scaling != self.scaling:
            raise FamilyMismatchError("vector does not belong to this algebra")
        if x.max_index > self.N:
            raise IndexRangeError(f"vector index {x.max_index} exceeds truncation N={self.N}")

    def embed(self, x: AlgebraVector) -> np.ndarray:
        return embed_matrix(x, self)

    def project(self, matrix: np.ndarray, tol: float | None = 1e-9) -> AlgebraVector:
        return project_matrix(matrix, self, tol)

    def random_vector(self, rng: np.random.Generator, nnz: int = 4, scale: float = 1.0) -> AlgebraVector:
        """Sparse vector with ``nnz`` standard-normal coefficients at random basis slots."""
        nnz = min(nnz, self.dim)
        picks = rng.choice(self.dim, size=nnz, replace=False)
        vals = rng.standard_normal(nnz) * scale
        return self.vector({self._basis[p]: v for p, v in zip(sorted(picks), vals)})


def embed_matrix(x: AlgebraVector, alg: TruncatedAlgebra) -> np.ndarray:
    """Dense N x N matrix of ``x`` (not an isometry unless lambda == 1)."""
    alg.check_vector(x)
    out = np.zeros((alg.N, alg.N))
    lam = alg.scaling
    for (i, j), c in x.coeffs.items():
        w = c * lam(i) * lam(j)
        if alg.family is Family.ORTHOGONAL:
            out[i - 1, j - 1] += w / SQRT2
            out[j - 1, i - 1] -= w / SQRT2
        else:
            out[i - 1, j - 1] += w
    return out


class ProjectionError(AlgebraError):
    """The matrix has a component outside the embedded subalgebra."""


def project_matrix(matrix: np.ndarray, alg: TruncatedAlgebra, tol: float | None = 1e-9) -> AlgebraVector:
    """Coordinates of an N x N matrix in the xi basis.

    The part of ``matrix`` outside the subalgebra is discarded; if its
    Frobenius norm exceeds ``tol`` times that of the input (plus a tiny
    absolute floor) a ProjectionError is raised. Pass ``tol=None`` to skip
    the check.
    """
    m = np.asarray(matrix, dtype=float)
    n = alg.N
    if m.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got shape {m.shape}")
    lam = np.array([alg.scaling(i) for i in range(1, n + 1)])
    weights = np.outer(lam, lam)
    coeffs: dict[Index, float] = {}
    fam = alg.family
    if fam is Family.GENERAL:
        c = m / weights
        coeffs = {(i + 1, j + 1): c[i, j] for i in range(n) for j in range(n) if c[i, j] != 0.0}
        rest = np.zeros_like(m)
    elif fam is Family.TRIANGULAR:
        iu = np.triu_indices(n, 1)
        c = m / weights
        coeffs = {(i + 1, j + 1): c[i, j] for i, j in zip(*iu) if c[i, j] != 0.0}
        rest = np.tril(m)
    else:
        skew = (m - m.T) / 2.0
        iu = np.triu_indices(n, 1)
        c = SQRT2 * skew / weights
        coeffs = {(i + 1, j + 1): c[i, j] for i, j in zip(*iu) if c[i, j] != 0.0}
        rest = (m + m.T) / 2.0
    if tol is not None:
        scale = np.linalg.norm(m)
        if np.linalg.norm(rest) > tol * scale + 1e-300:
            raise ProjectionError(
                f"matrix leaves the {fam} subalgebra (off-algebra norm {np.linalg.norm(rest):.3e})"
            )
    return AlgebraVector(coeffs, fam, alg.scaling)


# -- non-closure counterexample ----------------------------------------------------

def counterexample_blocks(K: int) -> tuple[GeneralScaling, dict[Index, float], dict[Index, float]]:
    """Pair weights and the coefficient maps of x and y for blocks l = 1..K.

    Block l lives on the indices 3l+1, 3l+2, 3l+3 with
    x_l = y_l = lambda_{3l+1,3l+2} = lambda_{3l+1,3l+3} = 1/l and
    lambda_{3l+2,3l+3} = 1/l**4 (weights symmetric in the pair).
    x = sum x_l (xi_{3l+1,3l+2} - xi_{3l+2,3l+1}), likewise y on (3l+1, 3l+3).
    """
    weights: dict[Index, float] = {}
    x: dict[Index, float] = {}
    y: dict[Index, float] = {}
    for l in range(1, K + 1):
        a, b = 1.0 / l, 1.0 / l**4
        p, q, r = 3 * l + 1, 3 * l + 2, 3 * l + 3
        for (s, t), w in (((p, q), a), ((p, r), a), ((q, r), b)):
            weights[(s, t)] = weights[(t, s)] = w
        x[(p, q)], x[(q, p)] = a, -a
        y[(p, r)], y[(r, p)] = a, -a
    return GeneralScaling(weights), x, y


def counterexample_partial_sum(K: int) -> float:
    """Partial sum over blocks 1..K of the squared bracket coefficients.

    Within block l the bracket is
    -x_l y_l lambda_{12} lambda_{13} / lambda_{23} (xi_{23} - xi_{32})
    (local indices) and distinct blocks commute, so the sum is
    sum_l a_l**8 / b_l**2. With a_l = 1/l, b_l = 1/l**4 every term is 1.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    l = np.arange(1, K + 1, dtype=float)
    a = 1.0 / l
    b = 1.0 / l**4
    x_l = y_l = a
    coeff = x_l * y_l * a * a / b
    return math.fsum(coeff * coeff)


def counterexample_bracket_matrix(K: int) -> tuple[np.ndarray, GeneralScaling, dict[Index, float], dict[Index, float]]:
    """Dense commutator [x, y] for small K, as a check of the block formula.

    Returns the matrix together with the weights and coefficient maps so
    callers can convert back to xi coordinates (entry / lambda_ij).
    """
    weights, x, y = counterexample_blocks(K)
    n = 3 * K + 3
    X = np.zeros((n, n))
    Y = np.zeros((n, n))
    for (i, j), c in x.items():
        X[i - 1, j - 1] = c * weights(i, j)
    for (i, j), c in y.items():
        Y[i - 1, j - 1] = c * weights(i, j)
    return X @ Y - Y @ X, weights, x, y
