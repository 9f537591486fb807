# -*- coding: utf-8 -*-
"""Two-dimensional Clifford algebra and the Dirac symbol

A single fixed representation is used throughout the package,

    gamma1 = [[0, i], [i, 0]]
    gamma2 = [[0, 1], [-1, 0]]
    gamma3 = [[1, 0], [0, -1]] = i gamma1 gamma2

so that Clifford multiplication by a real vector is skew-adjoint and the
symbol i eps (k1 gamma1 + k2 gamma2) + a gamma3 of eps D + a gamma3 is
Hermitian with spectrum -mu(k), +mu(k), mu(k) = sqrt(eps^2 |k|^2 + a^2).

"""

import logging

import numpy as np

log = logging.getLogger("sylab.clifford")

ENABLE_PEP8 = True

Identity = np.eye(2, dtype=complex)


def _frozen(rows):
    matrix = np.array(rows, dtype=complex)
    matrix.flags.writeable = False
    return matrix


class CliffordRep2(object):
    """The matrices gamma1, gamma2 and the chirality gamma3

    Example:
        >>> rep = make_clifford()
        >>> g1, g2, g3 = rep
        >>> bool(np.allclose(g1 @ g2 + g2 @ g1, 0))
        True
        >>> bool(np.allclose(1j * g1 @ g2, g3))
        True

    """

    __slots__ = ("gamma1", "gamma2", "gamma3")

    def __init__(self, gamma1, gamma2, gamma3):
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.gamma3 = gamma3

    def __iter__(self):
        return iter((self.gamma1, self.gamma2, self.gamma3))

    def __repr__(self):
        return "CliffordRep2()"

    def gamma(self, index):
        """Return gamma1 or gamma2 by 0-based direction index"""
        return (self.gamma1, self.gamma2)[index]


def makeClifford():
    """Return the fixed representation

    Example:
        >>> rep = makeClifford()
        >>> rep.gamma3.real.tolist()
        [[1.0, 0.0], [0.0, -1.0]]

    """

    return CliffordRep2(
        _frozen([[0, 1j], [1j, 0]]),
        _frozen([[0, 1], [-1, 0]]),
        _frozen([[1, 0], [0, -1]]),
    )


# Shared by every module, grid results stay comparable
Clifford = makeClifford()


def chirality():
    """gamma3 = i gamma1 gamma2, the complex volume element"""
    gamma3 = 1j * Clifford.gamma1 @ Clifford.gamma2
    assert np.allclose(gamma3, Clifford.gamma3), "Broken representation"
    return Clifford.gamma3


def modeSymbols(k1, k2, eps, a):
    """Closed-form symbols for arrays of wavevectors

    Arguments:
        k1, k2 (array_like): Wavevector components, any matching shape
        eps (float): Semiclassical parameter, > 0
        a (float): Mass, > 0

    Returns:
        (matrix, mu, proj_minus, proj_plus) with matrices of shape
        (..., 2, 2) and mu of shape (...)

    Example:
        >>> matrix, mu, minus, plus = modeSymbols([0.0, 1.0], [0.0, 0.0],
        ...                                       1.0, 1.0)
        >>> mu.round(12).tolist()
        [1.0, 1.414213562373]
        >>> bool(np.allclose(minus + plus, np.eye(2)))
        True

    """

    if eps <= 0 or a <= 0:
        raise ValueError("eps and a must be positive, got %s, %s" % (eps, a))

    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    k1, k2 = np.broadcast_arrays(k1, k2)

    matrix = (
        1j * eps * (k1[..., None, None] * Clifford.gamma1 +
                    k2[..., None, None] * Clifford.gamma2) +
        a * Clifford.gamma3
    )

    # M^2 = mu^2 I, hence (I +- M / mu) / 2 are the spectral projectors
    mu = np.sqrt(eps ** 2 * (k1 ** 2 + k2 ** 2) + a ** 2)
    scaled = matrix / mu[..., None, None]
    proj_plus = 0.5 * (Identity + scaled)
    proj_minus = 0.5 * (Identity - scaled)

    return matrix, mu, proj_minus, proj_plus


class ModeSymbol(object):
    """Symbol of eps D + a gamma3 at one wavevector

    Example:
        >>> symbol = dirac_symbol((0.0, 0.0), 1.0, 1.0)
        >>> symbol.eigen_pair
        (-1.0, 1.0)
        >>> symbol.proj_plus.real.tolist()
        [[1.0, 0.0], [0.0, 0.0]]

    """

    __slots__ = ("k", "eps", "a", "matrix", "mu",
                 "proj_minus", "proj_plus")

    def __init__(self, k, eps, a):
        self.k = (float(k[0]), float(k[1]))
        self.eps = eps
        self.a = a

        matrix, mu, minus, plus = modeSymbols(self.k[0], self.k[1], eps, a)
        self.matrix = matrix
        self.mu = float(mu)
        self.proj_minus = minus
        self.proj_plus = plus

    def __repr__(self):
        return "ModeSymbol(k=%r, mu=%.6g)" % (self.k, self.mu)

    @property
    def eigen_pair(self):
        return (-self.mu, self.mu)

    def determinant(self):
        return float(np.linalg.det(self.matrix).real)


def diracSymbol(k, eps, a):
    # type: (tuple, float, float) -> ModeSymbol
    """Fourier symbol i eps (k . gamma) + a gamma3 of eps D + a gamma3"""
    return ModeSymbol(k, eps, a)


def applyMatrix(matrix, psi):
    """Apply a 2x2 matrix, or a field of them, to a spinor of shape (2, ...)

    Example:
        >>> applyMatrix(Clifford.gamma3, np.array([1.0, 2.0])).real.tolist()
        [1.0, -2.0]

    """

    matrix = np.asarray(matrix)
    psi = np.asarray(psi)

    if matrix.ndim == 2:
        return np.tensordot(matrix, psi, axes=(1, 0))

    return np.einsum("...ij,j...->i...", matrix, psi)


def cliffordMul(X, zeta):
    """Clifford multiplication (X1 gamma1 + X2 gamma2) zeta

    X and zeta broadcast, so a field of vectors of shape (2, ...) acts
    pointwise on a field of spinors of shape (2, ...).

    Example:
        >>> cliffordMul((1.0, 0.0), (1.0, 0.0)).tolist()
        [0j, 1j]
        >>> cliffordMul((0.0, 0.0), (1.0, 2.0)).tolist()
        [0j, 0j]

    """

    x1, x2 = X[0], X[1]
    zeta = np.asarray(zeta, dtype=complex)
    g1, g2 = Clifford.gamma(0), Clifford.gamma(1)

    return np.stack([
        (x1 * g1[0, 0] + x2 * g2[0, 0]) * zeta[0] +
        (x1 * g1[0, 1] + x2 * g2[0, 1]) * zeta[1],
        (x1 * g1[1, 0] + x2 * g2[1, 0]) * zeta[0] +
        (x1 * g1[1, 1] + x2 * g2[1, 1]) * zeta[1],
    ])


def hermitian(psi, phi):
    """Pointwise Hermitian product (psi, phi) = sum psi_k conj(phi_k)

    Example:
        >>> complex(hermitian(np.array([1j, 0]), np.array([1j, 0])))
        (1+0j)

    """

    return np.sum(np.asarray(psi) * np.conj(phi), axis=0)


if ENABLE_PEP8:
    make_clifford = makeClifford
    dirac_symbol = diracSymbol
    mode_symbols = modeSymbols
    clifford_mul = cliffordMul
    apply_matrix = applyMatrix
