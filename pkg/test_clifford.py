import numpy as np

from nose.tools import (
    assert_equal,
    assert_almost_equal,
    assert_less,
    assert_raises,
    assert_true,
)

from sylab import clifford
from sylab.clifford import Clifford


def _random_spinors(count, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(count, 2)) + 1j * rng.normal(size=(count, 2))


def test_printed_matrices():
    """make_clifford() returns the fixed representation"""
    rep = clifford.make_clifford()
    assert_true(np.array_equal(rep.gamma1, [[0, 1j], [1j, 0]]))
    assert_true(np.array_equal(rep.gamma2, [[0, 1], [-1, 0]]))
    assert_true(np.array_equal(rep.gamma3, np.diag([1, -1])))


def test_clifford_relations():
    """gamma_i gamma_j + gamma_j gamma_i = -2 delta_ij"""
    gammas = (Clifford.gamma(0), Clifford.gamma(1))
    for i, gi in enumerate(gammas):
        for j, gj in enumerate(gammas):
            expected = -2.0 * np.eye(2) * (i == j)
            assert_less(np.abs(gi @ gj + gj @ gi - expected).max(), 1e-15)


def test_gamma_by_direction():
    """Direction indices 0 and 1 select gamma1 and gamma2"""
    assert_true(Clifford.gamma(0) is Clifford.gamma1)
    assert_true(Clifford.gamma(1) is Clifford.gamma2)
    assert_raises(IndexError, Clifford.gamma, 2)


def test_chirality():
    """gamma3 = i gamma1 gamma2 squares to one and anticommutes"""
    g1, g2, g3 = Clifford
    assert_true(np.array_equal(clifford.chirality(), 1j * g1 @ g2))
    assert_true(np.array_equal(g3 @ g3, np.eye(2)))
    assert_true(np.array_equal(g3, g3.conj().T))
    for g in (g1, g2):
        assert_true(np.array_equal(g3 @ g + g @ g3, np.zeros((2, 2))))
        assert_true(np.array_equal(1j * g, (1j * g).conj().T))


def test_representation_is_read_only():
    """The shared matrices cannot be modified in place"""

    def mutate():
        Clifford.gamma1[0, 0] = 1.0

    assert_raises(ValueError, mutate)


def test_symbol_at_zero():
    """k = 0 reduces the symbol to a gamma3"""
    symbol = clifford.dirac_symbol((0.0, 0.0), 0.3, 2.0)
    assert_equal(symbol.eigen_pair, (-2.0, 2.0))
    assert_true(np.allclose(symbol.proj_plus, np.diag([1, 0])))
    assert_true(np.allclose(symbol.proj_minus, np.diag([0, 1])))


def test_symbol_eigenvalues():
    """Eigenvalues are -mu, +mu with mu = sqrt(eps^2 |k|^2 + a^2)"""
    symbol = clifford.dirac_symbol((1.0, 0.0), 1.0, 1.0)
    eigenvalues = np.linalg.eigvalsh(symbol.matrix)
    assert_almost_equal(eigenvalues[0], -np.sqrt(2), places=13)
    assert_almost_equal(eigenvalues[1], np.sqrt(2), places=13)


def test_symbol_invariants():
    """Projectors are complete, orthogonal, idempotent and Hermitian"""
    rng = np.random.default_rng(1)
    for k in rng.normal(scale=5.0, size=(50, 2)):
        eps, a = rng.uniform(0.05, 2.0, size=2)
        symbol = clifford.dirac_symbol(k, eps, a)
        M, minus, plus = symbol.matrix, symbol.proj_minus, symbol.proj_plus
        mu2 = eps ** 2 * (k @ k) + a ** 2

        assert_less(np.abs(M - M.conj().T).max(), 1e-12)
        assert_less(np.abs(minus + plus - np.eye(2)).max(), 1e-12)
        assert_less(np.abs(minus @ plus).max(), 1e-12)
        for proj in (minus, plus):
            assert_less(np.abs(proj @ proj - proj).max(), 1e-12)
            assert_less(np.abs(proj - proj.conj().T).max(), 1e-12)

        assert_less(np.abs(M @ plus - symbol.mu * plus).max(), 1e-12)
        assert_less(np.abs(M @ minus + symbol.mu * minus).max(), 1e-12)
        assert_almost_equal(symbol.determinant(), -mu2, delta=1e-12 * mu2)
        assert_less(abs(sum(np.linalg.eigvalsh(M))), 1e-13 * np.sqrt(mu2))


def test_symbol_rejects_nonpositive():
    """eps and a must be positive"""
    assert_raises(ValueError, clifford.dirac_symbol, (0, 0), 0.0, 1.0)
    assert_raises(ValueError, clifford.dirac_symbol, (0, 0), 1.0, -1.0)


def test_vectorized_symbols_match_single():
    """mode_symbols agrees with dirac_symbol mode by mode"""
    k1 = np.array([[0.0, 1.5], [-2.0, 3.0]])
    k2 = np.array([[0.5, -1.0], [0.0, 2.5]])
    matrix, mu, minus, plus = clifford.mode_symbols(k1, k2, 0.2, 1.0)
    assert_equal(matrix.shape, (2, 2, 2, 2))

    for index in np.ndindex(k1.shape):
        single = clifford.dirac_symbol((k1[index], k2[index]), 0.2, 1.0)
        assert_true(np.allclose(matrix[index], single.matrix, atol=1e-15))
        assert_almost_equal(mu[index], single.mu, places=14)
        assert_true(np.allclose(plus[index], single.proj_plus, atol=1e-15))


def test_clifford_mul_examples():
    """Multiplication by e1 and by the zero vector"""
    assert_true(np.array_equal(clifford.clifford_mul((1, 0), (1, 0)),
                               [0, 1j]))
    assert_true(np.array_equal(clifford.clifford_mul((0, 0), (3, 4j)),
                               [0, 0]))


def test_clifford_mul_squares_to_minus_norm():
    """X.X.zeta = -|X|^2 zeta"""
    rng = np.random.default_rng(2)
    for zeta in _random_spinors(50, seed=3):
        X = rng.normal(size=2)
        twice = clifford.clifford_mul(X, clifford.clifford_mul(X, zeta))
        assert_less(np.abs(twice + (X @ X) * zeta).max(), 1e-13)

        unit = X / np.linalg.norm(X)
        twice = clifford.clifford_mul(unit, clifford.clifford_mul(unit, zeta))
        assert_less(np.abs(twice + zeta).max(), 1e-14)


def test_clifford_mul_skew_adjoint():
    """Re(X.zeta, zeta) = 0 for real X"""
    rng = np.random.default_rng(4)
    for zeta in _random_spinors(50, seed=5):
        X = rng.normal(size=2)
        value = clifford.hermitian(clifford.clifford_mul(X, zeta), zeta)
        assert_less(abs(value.real), 1e-13 * (1 + np.abs(zeta) @ np.abs(zeta)))


def test_clifford_mul_on_fields():
    """Vector fields act pointwise on spinor fields"""
    rng = np.random.default_rng(6)
    X = rng.normal(size=(2, 4, 3))
    psi = rng.normal(size=(2, 4, 3)) + 1j * rng.normal(size=(2, 4, 3))
    field = clifford.clifford_mul(X, psi)

    for i, j in np.ndindex(4, 3):
        point = clifford.clifford_mul(X[:, i, j], psi[:, i, j])
        assert_true(np.allclose(field[:, i, j], point, atol=1e-15))


def test_apply_matrix_field():
    """A field of matrices acts like the constant matrix at each point"""
    rng = np.random.default_rng(7)
    psi = rng.normal(size=(2, 5)) + 1j * rng.normal(size=(2, 5))
    matrices = np.broadcast_to(Clifford.gamma2, (5, 2, 2))
    assert_true(np.allclose(clifford.apply_matrix(matrices, psi),
                            clifford.apply_matrix(Clifford.gamma2, psi)))
