"""Brute-force recomputation of brackets and Ricci curvature.

Nothing here uses the per-family bracket formulas or any closed form.
Basis matrices are built from their definition, structure constants come
from raw matrix commutators projected back with the Frobenius product,
and curvature is assembled by composing dense connection operators.
The cost is O(dim^3) memory, which is fine up to N = 12.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hsgeo.algebra import AlgebraVector, Family, TruncatedAlgebra


class OracleProjectionError(RuntimeError):
    """A commutator did not decompose in the embedded basis."""


def basis_matrices(alg: TruncatedAlgebra) -> np.ndarray:
    """Stack of the N x N matrices of xi_b, in basis order."""
    n = alg.N
    lam = [alg.scaling(i) for i in range(1, n + 1)]
    out = np.zeros((alg.dim, n, n))
    for pos, (i, j) in enumerate(alg.basis_indices()):
        e = np.zeros((n, n))
        e[i - 1, j - 1] = 1.0
        if alg.family is Family.ORTHOGONAL:
            e = (e - e.T) / np.sqrt(2.0)
        out[pos] = lam[i - 1] * lam[j - 1] * e
    return out


@dataclass(frozen=True, eq=False)
class StructureConstants:
    """c[a, b, e] with [xi_a, xi_b] = sum_e c[a, b, e] xi_e."""

    alg: TruncatedAlgebra
    c: np.ndarray
    residual: float

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("a,b,abe->e", x, y, self.c)


@lru_cache(maxsize=32)
def structure_constants(alg: TruncatedAlgebra, tol: float = 1e-12) -> StructureConstants:
    """Commutate every ordered pair of basis matrices and project back.

    The basis matrices are mutually Frobenius-orthogonal, so projection is
    a division by their Gram diagonal; the normalization is read off the
    embedding rather than assumed. Raises when the reconstruction misses.
    """
    if alg.N < 2:
        raise ValueError("structure constants need N >= 2")
    E = basis_matrices(alg)
    d = alg.dim
    flat = E.reshape(d, -1)
    gram = flat @ flat.T
    diag = np.diag(gram).copy()
    if np.abs(gram - np.diag(diag)).max() > 1e-14 * diag.max():
        raise OracleProjectionError("embedded basis is not Frobenius-orthogonal")
    prod = np.einsum("aij,bjk->abik", E, E)
    comm = (prod - prod.transpose(1, 0, 2, 3)).reshape(d * d, -1)
    c = (comm @ flat.T) / diag
    recon = c @ flat
    scale = max(float(np.abs(comm).max()), 1e-300)
    residual = float(np.abs(recon - comm).max()) / scale
    if residual > tol:
        raise OracleProjectionError(f"commutator projection residual {residual:.3e} exceeds {tol:g}")
    c = c.reshape(d, d, d)
    c[np.abs(c) < 1e-15 * max(float(np.abs(c).max()), 1e-300)] = 0.0
    return StructureConstants(alg, c, residual)


@lru_cache(maxsize=32)
def connection_coefficients(alg: TruncatedAlgebra) -> np.ndarray:
    """G[a, b, e] = (nabla_{xi_a} xi_b, xi_e) from the defining half-sum.

    (nabla_a b, e) = ( ([a,b], e) - ([b,e], a) + ([e,a], b) ) / 2, and in
    an orthonormal basis each pairing is a single structure constant.
    """
    c = structure_constants(alg).c
    return 0.5 * (c - np.einsum("bea->abe", c) + np.einsum("eab->abe", c))


def _coords(x: AlgebraVector, alg: TruncatedAlgebra) -> np.ndarray:
    return alg.to_array(x)


def oracle_connection(x: np.ndarray, y: np.ndarray, alg: TruncatedAlgebra) -> np.ndarray:
    return np.einsum("a,b,abe->e", x, y, connection_coefficients(alg))


def oracle_riemann(x: np.ndarray, y: np.ndarray, z: np.ndarray, alg: TruncatedAlgebra) -> np.ndarray:
    sc = structure_constants(alg)
    nab = lambda u, v: oracle_connection(u, v, alg)  # noqa: E731
    return nab(sc.bracket(x, y), z) - nab(x, nab(y, z)) + nab(y, nab(x, z))


def oracle_ricci_vector(x: np.ndarray, alg: TruncatedAlgebra) -> float:
    """sum_b (R_{x, xi_b} x, xi_b) from dense operators, x given in coordinates."""
    c = structure_constants(alg).c
    G = connection_coefficients(alg)
    NX = np.einsum("a,afe->ef", x, G)       # y -> nabla_x y
    Gx = np.einsum("abe,b->ae", G, x)       # row a: nabla_{xi_a} x
    Bx = np.einsum("a,abe->be", x, c)       # row b: [x, xi_b]
    t1 = np.einsum("be,eb->b", Bx, Gx)      # (nabla_{[x,xi_b]} x, xi_b)
    t2 = np.einsum("bf,bf->b", Gx, NX)      # (nabla_x nabla_{xi_b} x, xi_b)
    t3 = np.einsum("bfb,f->b", G, NX @ x)   # (nabla_{xi_b} nabla_x x, xi_b)
    return float(np.sum(t1 - t2 + t3))


def oracle_ricci(x: AlgebraVector, alg: TruncatedAlgebra) -> float:
    """Truncated Ricci curvature of ``x`` through structure constants only."""
    return oracle_ricci_vector(_coords(x, alg), alg)


def oracle_selfadjoint(x: AlgebraVector, alg: TruncatedAlgebra) -> np.ndarray:
    """sum_b R_{xi_b, x} xi_b in coordinates."""
    X = _coords(x, alg)
    eye = np.eye(alg.dim)
    return np.sum([oracle_riemann(eye[b], X, eye[b], alg) for b in range(alg.dim)], axis=0)


def jacobi_defect(alg: TruncatedAlgebra) -> float:
    """max over triples of |sum_e c_ab^e c_ec^f + c_bc^e c_ea^f + c_ca^e c_eb^f|."""
    c = structure_constants(alg).c
    t = np.einsum("abe,ecf->abcf", c, c)
    total = t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)
    return float(np.abs(total).max())
