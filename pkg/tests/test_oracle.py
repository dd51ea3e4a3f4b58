import numpy as np
import pytest

from hsgeo.algebra import Family, TruncatedAlgebra, bracket
from hsgeo.curvature import levi_civita, ricci_selfadjoint, ricci_truncated, riemann
from hsgeo.oracle import (
    basis_matrices,
    jacobi_defect,
    oracle_connection,
    oracle_ricci,
    oracle_ricci_vector,
    oracle_riemann,
    oracle_selfadjoint,
    structure_constants,
)
from hsgeo.scaling import ScalingSequence

ONE = ScalingSequence.constant(1.0)
SCALINGS = [ONE, ScalingSequence.power(1), ScalingSequence.parse("geometric:2^-0.5")]


def test_structure_constant_example():
    alg = TruncatedAlgebra(Family.GENERAL, ONE, 3)
    c = structure_constants(alg).c
    a, b, e = alg.position((1, 2)), alg.position((2, 3)), alg.position((1, 3))
    row = c[a, b]
    assert row[e] == 1.0
    assert np.count_nonzero(row) == 1


@pytest.mark.parametrize("fam", list(Family))
@pytest.mark.parametrize("lam", SCALINGS, ids=str)
def test_structure_constants_shape_and_sparsity(fam, lam):
    alg = TruncatedAlgebra(fam, lam, 6)
    sc = structure_constants(alg)
    c = sc.c
    assert sc.residual <= 1e-12
    assert np.array_equal(c, -c.transpose(1, 0, 2))
    assert not np.any(c[np.arange(alg.dim), np.arange(alg.dim)])
    limit = 4 if fam is Family.ORTHOGONAL else 2
    assert np.count_nonzero(c, axis=2).max() <= limit


@pytest.mark.parametrize("fam", list(Family))
@pytest.mark.parametrize("lam", SCALINGS, ids=str)
def test_structure_constants_agree_with_bracket(fam, lam):
    alg = TruncatedAlgebra(fam, lam, 6)
    c = structure_constants(alg).c
    basis = alg.basis_vectors()
    for a, xa in enumerate(basis):
        for b, xb in enumerate(basis):
            np.testing.assert_allclose(c[a, b], alg.to_array(bracket(xa, xb)), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("fam", list(Family))
@pytest.mark.parametrize("lam", SCALINGS, ids=str)
@pytest.mark.parametrize("N", [3, 4, 6])
def test_structure_constant_jacobi(fam, lam, N):
    assert jacobi_defect(TruncatedAlgebra(fam, lam, N)) <= 1e-12


def test_basis_matrices_are_frobenius_orthogonal():
    alg = TruncatedAlgebra(Family.ORTHOGONAL, ScalingSequence.power(1), 4)
    E = basis_matrices(alg).reshape(alg.dim, -1)
    gram = E @ E.T
    np.testing.assert_allclose(gram, np.diag(np.diag(gram)), atol=1e-16)


def test_structure_constants_need_two_indices():
    with pytest.raises(ValueError):
        structure_constants(TruncatedAlgebra(Family.GENERAL, ONE, 1))


def test_oracle_ricci_examples():
    gl = TruncatedAlgebra(Family.GENERAL, ONE, 10)
    assert oracle_ricci(gl.xi(1, 2), gl) == pytest.approx(-5.0, abs=1e-12)
    assert oracle_ricci(gl.xi(1, 1), gl) == pytest.approx(-13.5, abs=1e-12)
    so = TruncatedAlgebra(Family.ORTHOGONAL, ONE, 10)
    assert oracle_ricci(so.xi(1, 2), so) == pytest.approx(2.0, abs=1e-12)
    tri = TruncatedAlgebra(Family.TRIANGULAR, ScalingSequence.power(1), 8)
    x = tri.xi(1, 2)
    assert oracle_ricci(x, tri) == pytest.approx(ricci_truncated(x, tri), rel=1e-9)


@pytest.mark.parametrize("fam", list(Family))
@pytest.mark.parametrize("lam", SCALINGS, ids=str)
@pytest.mark.parametrize("N", [6, 8, 10, 12])
def test_dual_path_equality(fam, lam, N):
    alg = TruncatedAlgebra(fam, lam, N)
    for i, j in alg.basis_indices():
        if max(i, j) > 4:
            continue
        x = alg.xi(i, j)
        orc = oracle_ricci(x, alg)
        assert abs(orc - ricci_truncated(x, alg)) <= 1e-9 * (1 + abs(orc))


@pytest.mark.parametrize("fam", list(Family))
def test_oracle_matches_sparse_path_on_random_vectors(fam):
    rng = np.random.default_rng(20)
    alg = TruncatedAlgebra(fam, ScalingSequence.power(1), 6)
    for _ in range(5):
        x, y, z = (alg.random_vector(rng, 5) for _ in range(3))
        X, Y, Z = (alg.to_array(v) for v in (x, y, z))
        np.testing.assert_allclose(oracle_connection(X, Y, alg), alg.to_array(levi_civita(x, y, alg)),
                                   atol=1e-13)
        np.testing.assert_allclose(oracle_riemann(X, Y, Z, alg), alg.to_array(riemann(x, y, z, alg)),
                                   atol=1e-12)
        assert oracle_ricci_vector(X, alg) == pytest.approx(ricci_truncated(x, alg), rel=1e-10, abs=1e-12)
        np.testing.assert_allclose(oracle_selfadjoint(x, alg), alg.to_array(ricci_selfadjoint(x, alg)),
                                   atol=1e-12)
