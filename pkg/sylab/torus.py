# -*- coding: utf-8 -*-
"""Min-max solver for eps D psi + a gamma3 psi = |psi|^(p-2) psi on a flat torus

Spinors are stored by their Fourier coefficients on the modes

    k = 2 pi (j + delta) / L,    |j| <= N / 3

where delta in {0, 1/2}^2 selects the spin structure. The operator is
diagonal per mode with symbol M(k) = i eps (k . gamma) + a gamma3, whose
spectral projectors split every spinor into psi = psi+ + psi-. With

    <psi, phi>_eps = (L1 L2 / eps^2) Re sum_k mu(k) psi(k) . conj(phi(k))

the functional

    L(psi) = 1/2 (|psi+|^2 - |psi-|^2) - eps^-2 int F(|psi|)

is concave in psi- for fixed psi+. Its maximizer chi(u) reduces the problem
to I(u) = L(u + chi(u)) on the positive space, minimized over the Nehari
set { t u : t maximizes I(t u) }.

"""

import json
import math
import logging
import functools

import numpy as np
from scipy import fft, ndimage, optimize
from scipy.sparse import linalg as sparse_linalg

from . import common
from .common import (
    withTiming,
    Stats,
    SylabError,
    NotConvergedError,
    SaddleEscapeError,
    NoSignChangeError,
)
from .clifford import modeSymbols, applyMatrix
from . import bubble

log = logging.getLogger("sylab.torus")

ENABLE_PEP8 = True

BubbleTransplant = "BUBBLE_TRANSPLANT"
Random = "RANDOM"

TwoPi = 2.0 * math.pi

SweepColumns = ("eps", "mu_eps", "width", "decay_c", "grad_norm")


# ----------------------
#
# Grids and spinors
#
# ----------------------


class TorusGrid(object):
    """Uniform N1 x N2 collocation grid on [0, L1) x [0, L2)

    Example:
        >>> grid = TorusGrid(16, 32, delta=(0.5, 0))
        >>> grid.mask.shape, int(grid.mask.sum())
        ((16, 32), 231)
        >>> TorusGrid(15, 16)
        Traceback (most recent call last):
        ...
        ValueError: N1, N2 must be even and >= 16, got (15, 16)

    """

    def __init__(self, N1=64, N2=64, L1=TwoPi, L2=TwoPi, delta=(0.0, 0.0)):
        N1, N2 = int(N1), int(N2)
        if N1 < 16 or N2 < 16 or N1 % 2 or N2 % 2:
            raise ValueError("N1, N2 must be even and >= 16, got %s" % (
                (N1, N2),))

        if L1 <= 0 or L2 <= 0:
            raise ValueError("Periods must be positive, got %s" % ((L1, L2),))

        delta = tuple(float(d) for d in delta)
        if any(d not in (0.0, 0.5) for d in delta) or len(delta) != 2:
            raise ValueError("delta must lie in {0, 1/2}^2, got %s" % (
                delta,))

        self.N1 = N1
        self.N2 = N2
        self.L1 = float(L1)
        self.L2 = float(L2)
        self.delta = delta

    def __repr__(self):
        return "TorusGrid(%d, %d, L=(%g, %g), delta=%s)" % (
            self.N1, self.N2, self.L1, self.L2, self.delta)

    @property
    def key(self):
        return (self.N1, self.N2, self.L1, self.L2, self.delta)

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and self.key == other.key

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash(self.key)

    @property
    def shape(self):
        return (self.N1, self.N2)

    @property
    def spacing(self):
        return (self.L1 / self.N1, self.L2 / self.N2)

    @property
    def cell(self):
        return self.L1 * self.L2 / (self.N1 * self.N2)

    def mesh(self):
        x1 = np.arange(self.N1) * self.spacing[0]
        x2 = np.arange(self.N2) * self.spacing[1]
        return np.meshgrid(x1, x2, indexing="ij")

    def integers(self):
        """Integer mode indices j1, j2 in FFT order"""
        j1 = np.fft.fftfreq(self.N1, 1.0 / self.N1)
        j2 = np.fft.fftfreq(self.N2, 1.0 / self.N2)
        return j1, j2

    @property
    def mask(self):
        """2/3-rule dealiasing: keep |j| <= N / 3"""
        j1, j2 = self.integers()
        return ((np.abs(j1) <= self.N1 // 3)[:, None] &
                (np.abs(j2) <= self.N2 // 3)[None, :])

    @property
    def phase(self):
        """exp(i 2 pi delta . x / L), the twist of the spin structure"""
        X1, X2 = self.mesh()
        return np.exp(2j * math.pi * (self.delta[0] * X1 / self.L1 +
                                      self.delta[1] * X2 / self.L2))

    def displacement(self, X1, X2, y):
        """x - y folded into [-L/2, L/2) per axis"""
        d1 = (X1 - y[0] + 0.5 * self.L1) % self.L1 - 0.5 * self.L1
        d2 = (X2 - y[1] + 0.5 * self.L2) % self.L2 - 0.5 * self.L2
        return d1, d2

    def dump(self):
        return {
            "N1": self.N1,
            "N2": self.N2,
            "L1": self.L1,
            "L2": self.L2,
            "delta": list(self.delta),
        }

    @classmethod
    def load(cls, data):
        return cls(**data)


class FourierSpinor(object):
    """Spinor on a TorusGrid, held as coefficients of shape (2, N1, N2)"""

    __slots__ = ("coefficients", "grid")

    def __init__(self, coefficients, grid):
        self.coefficients = np.asarray(coefficients, dtype=complex)
        self.grid = grid

    def __repr__(self):
        return "FourierSpinor(%r)" % self.grid

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros((2,) + grid.shape, dtype=complex), grid)

    @classmethod
    def fromPhysical(cls, values, grid, twist=True):
        """Coefficients of gridded values, restricted to dealiased modes"""
        values = np.asarray(values, dtype=complex)
        if twist:
            values = values * np.conj(grid.phase)

        count = grid.N1 * grid.N2
        coefficients = fft.fft2(values, axes=(1, 2),
                                workers=common.THREADS) / count
        return cls(coefficients * grid.mask, grid)

    def physical(self, twist=True):
        grid = self.grid
        values = fft.ifft2(self.coefficients, axes=(1, 2),
                           workers=common.THREADS) * (grid.N1 * grid.N2)
        return values * grid.phase if twist else values

    def modulus(self):
        return np.sqrt(np.sum(np.abs(self.physical()) ** 2, axis=0))

    def __add__(self, other):
        return FourierSpinor(self.coefficients + other.coefficients,
                             self.grid)

    def __sub__(self, other):
        return FourierSpinor(self.coefficients - other.coefficients,
                             self.grid)

    def __neg__(self):
        return FourierSpinor(-self.coefficients, self.grid)

    def __mul__(self, scalar):
        return FourierSpinor(scalar * self.coefficients, self.grid)

    __rmul__ = __mul__

    if ENABLE_PEP8:
        from_physical = fromPhysical


class ModeTable(object):
    """Symbols, projectors and mu(k) for every mode of a grid"""

    def __init__(self, grid, eps, a):
        j1, j2 = grid.integers()
        k1 = TwoPi * (j1 + grid.delta[0]) / grid.L1
        k2 = TwoPi * (j2 + grid.delta[1]) / grid.L2
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")

        matrix, mu, minus, plus = modeSymbols(K1, K2, eps, a)

        self.grid = grid
        self.eps = eps
        self.a = a
        self.k1 = K1
        self.k2 = K2
        self.matrix = matrix
        self.mu = mu
        self.proj_minus = minus
        self.proj_plus = plus
        self.mask = grid.mask
        self.scale = grid.L1 * grid.L2 / eps ** 2

        self._index = np.nonzero(self.mask)
        self._root = np.sqrt(mu[self._index])

    def __repr__(self):
        return "ModeTable(%r, eps=%g, a=%g)" % (self.grid, self.eps, self.a)

    @property
    def size(self):
        """Length of the real vector view of a spinor"""
        return 4 * len(self._root)

    def plus(self, psi):
        return FourierSpinor(applyMatrix(self.proj_plus, psi.coefficients),
                             psi.grid)

    def minus(self, psi):
        return FourierSpinor(applyMatrix(self.proj_minus, psi.coefficients),
                             psi.grid)

    def apply(self, psi):
        """The symbol M(k) mode by mode"""
        return FourierSpinor(applyMatrix(self.matrix, psi.coefficients),
                             psi.grid)

    def inner(self, psi, phi):
        products = (psi.coefficients * np.conj(phi.coefficients)).real
        return float(self.scale * np.sum(self.mu * products))

    def norm2(self, psi):
        return self.inner(psi, psi)

    def pack(self, psi):
        """Real vector with Euclidean dot equal to <., .>_eps / scale"""
        z = psi.coefficients[(slice(None),) + self._index] * self._root
        return np.concatenate([z.real.ravel(), z.imag.ravel()])

    def unpack(self, vector):
        half = len(vector) // 2
        z = (vector[:half] + 1j * vector[half:]).reshape(2, -1)
        coefficients = np.zeros((2,) + self.grid.shape, dtype=complex)
        coefficients[(slice(None),) + self._index] = z / self._root
        return FourierSpinor(coefficients, self.grid)


@functools.lru_cache(maxsize=16)
def assemble(grid, eps, a):
    # type: (TorusGrid, float, float) -> ModeTable
    """Mode table of eps D + a gamma3 on the grid

    Example:
        >>> modes = assemble(TorusGrid(16, 16), 0.5, 1.0)
        >>> float(modes.mu[0, 0])
        1.0
        >>> float(modes.mu[modes.mask].min())
        1.0

    """

    return ModeTable(grid, float(eps), float(a))


# ----------------------
#
# Configuration
#
# ----------------------


def parseSeed(text):
    """'bubble' or 'random:N' as (mode, value)

    Example:
        >>> parseSeed("random:7")
        ('RANDOM', 7)
        >>> parseSeed("bubble")
        ('BUBBLE_TRANSPLANT', None)

    """

    name, _, value = str(text).partition(":")
    if name.lower() in ("bubble", BubbleTransplant.lower()):
        return BubbleTransplant, None

    if name.lower() == Random.lower():
        try:
            return Random, int(value or 0)
        except ValueError:
            pass

    raise ValueError("Seed must be 'bubble' or 'random:N', got %r" % text)


class SolverConfig(object):
    """Everything a torus solve depends on

    Example:
        >>> config = SolverConfig(eps=0.2, seed="random:3")
        >>> config.seed_mode
        ('RANDOM', 3)
        >>> SolverConfig.load(config.dump()).dump() == config.dump()
        True

    """

    def __init__(self,
                 eps=0.2,
                 a=1.0,
                 p=3.0,
                 grid=None,
                 tol_inner=1e-10,
                 tol_outer=1e-8,
                 max_inner=100,
                 max_outer=500,
                 seed="bubble",
                 center=None):

        if eps <= 0 or a <= 0:
            raise ValueError("eps and a must be positive, got %s, %s" % (
                eps, a))

        if int(max_outer) < 1:
            raise ValueError("max_outer must be at least 1, got %s" %
                             max_outer)

        self.eps = float(eps)
        self.a = float(a)
        self.p = common.checkExponent(p)
        self.grid = grid or TorusGrid()
        self.tol_inner = tol_inner
        self.tol_outer = tol_outer
        self.max_inner = int(max_inner)
        self.max_outer = int(max_outer)
        self.seed = str(seed)
        self.seed_mode = parseSeed(seed)
        self.center = tuple(center) if center is not None else (
            0.5 * self.grid.L1, 0.5 * self.grid.L2)

    def __repr__(self):
        return "SolverConfig(eps=%g, a=%g, p=%g, %r)" % (
            self.eps, self.a, self.p, self.grid)

    @property
    def modes(self):
        return assemble(self.grid, self.eps, self.a)

    def replace(self, **kwargs):
        data = self.dump()
        data.update(kwargs)
        return type(self).load(data)

    def dump(self):
        return {
            "eps": self.eps,
            "a": self.a,
            "p": self.p,
            "grid": self.grid.dump(),
            "tol_inner": self.tol_inner,
            "tol_outer": self.tol_outer,
            "max_inner": self.max_inner,
            "max_outer": self.max_outer,
            "seed": self.seed,
            "center": list(self.center),
        }

    @classmethod
    def load(cls, data):
        data = dict(data)
        grid = data.pop("grid", None)
        if isinstance(grid, dict):
            grid = TorusGrid.load(grid)
        return cls(grid=grid, **data)


def loadConfig(path):
    with open(path) as f:
        return SolverConfig.load(json.load(f))


# ----------------------
#
# Functional
#
# ----------------------


def normEps(psi, config):
    """Squared eps-norm (L1 L2 / eps^2) sum mu |psi(k)|^2

    Example:
        >>> config = SolverConfig(eps=1.0, grid=TorusGrid(16, 16))
        >>> psi = FourierSpinor.zeros(config.grid)
        >>> psi.coefficients[0, 0, 0] = 1.0
        >>> round(normEps(psi, config) / (4 * math.pi ** 2), 12)
        1.0

    """

    return config.modes.norm2(psi)


def _nonlinearIntegral(values, config):
    modulus = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    total = np.sum(common.primitive(modulus, config.p))
    return float(config.grid.cell * total / config.eps ** 2)


def _quadratic(psi, config):
    """1/2 (|psi+|^2 - |psi-|^2) = 1/2 scale Re sum conj(psi) . M psi"""
    modes = config.modes
    Mpsi = applyMatrix(modes.matrix, psi.coefficients)
    return 0.5 * modes.scale * float(np.sum(
        (np.conj(psi.coefficients) * Mpsi).real))


def energyL(psi, config, values=None):
    """L(psi), the nonlinear part by quadrature on the grid"""
    values = psi.physical() if values is None else values
    return _quadratic(psi, config) - _nonlinearIntegral(values, config)


def _forcing(values, config):
    modulus = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    return common.nonlinearity(modulus, config.p) * values


def gradientL(psi, config, values=None):
    # type: (FourierSpinor, SolverConfig, np.ndarray) -> FourierSpinor
    """Riesz representer of L'(psi) in <., .>_eps

    (M psi - N(psi)) / mu per mode, with N(psi) = f(|psi|) psi dealiased;
    equivalently (P+ - P-) psi - N(psi) / mu.

    """

    modes = config.modes
    values = psi.physical() if values is None else values
    forcing = FourierSpinor.fromPhysical(_forcing(values, config), psi.grid)
    residual = applyMatrix(modes.matrix, psi.coefficients) - \
        forcing.coefficients
    return FourierSpinor(residual * modes.mask / modes.mu, psi.grid)


def gradientNorm(psi, config):
    return math.sqrt(normEps(gradientL(psi, config), config))


# ----------------------
#
# Inner maximization
#
# ----------------------


def _hessianOperator(values, config):
    """v -> v + mu^-1 P- N'(psi) v on the negative space, packed"""
    modes = config.modes
    p = config.p
    modulus = np.sqrt(np.sum(np.abs(values) ** 2, axis=0))
    safe = np.where(modulus > 0, modulus, 1.0)
    weight = modulus ** (p - 2.0)
    cross = np.where(modulus > 0, (p - 2.0) * safe ** (p - 4.0), 0.0)

    def matvec(vector):
        h = modes.unpack(np.ravel(vector))
        hv = h.physical()
        along = np.sum((np.conj(values) * hv).real, axis=0)
        derivative = weight * hv + cross * along * values
        response = FourierSpinor.fromPhysical(derivative, h.grid)
        response = FourierSpinor(response.coefficients / modes.mu, h.grid)
        return modes.pack(h + modes.minus(response))

    size = modes.size
    return sparse_linalg.LinearOperator((size, size), matvec=matvec,
                                        dtype=float)


@withTiming()
def innerMaximize(u, config, guess=None):
    # type: (FourierSpinor, SolverConfig, FourierSpinor) -> FourierSpinor
    """chi(u), the maximizer of w -> L(u + w) over the negative space

    Damped Newton steps from conjugate gradients on the symmetrized
    Hessian, falling back to gradient ascent when Newton stalls.

    Raises:
        NotConvergedError: When max_inner iterations do not suffice or
            the line search stalls away from a critical point

    """

    Stats.InnerSolveCount += 1
    modes = config.modes

    w = modes.minus(guess) if guess is not None else \
        FourierSpinor.zeros(u.grid)

    for iteration in range(config.max_inner):
        psi = u + w
        values = psi.physical()
        gradient = modes.minus(gradientL(psi, config, values))
        norm = math.sqrt(modes.norm2(gradient))
        size = math.sqrt(modes.norm2(psi))

        if norm < config.tol_inner * max(1.0, size):
            return w

        operator = _hessianOperator(values, config)
        rhs = modes.pack(gradient)
        solution, _ = sparse_linalg.cg(operator, rhs,
                                       rtol=min(0.1, math.sqrt(norm)),
                                       maxiter=200)

        current = energyL(psi, config, values)
        for direction in (modes.unpack(solution), gradient):
            slope = modes.inner(gradient, direction)
            if slope <= 0:
                continue

            step = 1.0
            while step > 1e-10:
                trial = w + step * direction
                level = energyL(u + trial, config)
                if level >= current + 1e-4 * step * slope - \
                        1e-14 * abs(current):
                    break
                step *= 0.5
            else:
                continue

            w = trial
            break

        else:
            # No ascent direction left; accept only a roundoff-level floor
            if norm < math.sqrt(config.tol_inner) * max(1.0, size):
                log.debug("Inner ascent stalled at gradient %.3g" % norm)
                return w

            raise NotConvergedError(
                "Inner ascent stalled at gradient %.3g, above %.3g" % (
                    norm, config.tol_inner))

    raise NotConvergedError("Inner maximization did not reach %.3g in %d "
                            "iterations" % (config.tol_inner,
                                            config.max_inner))


def _reduced(u, config, guess=None):
    chi = innerMaximize(u, config, guess)
    return energyL(u + chi, config), chi


def reducedI(u, config, guess=None):
    """I(u) = L(u + chi(u)) for u in the positive space"""
    return _reduced(u, config, guess)[0]


def reducedGradient(u, config, chi=None):
    """Riesz gradient of I at u, P+ applied to L'(u + chi(u))"""
    chi = innerMaximize(u, config) if chi is None else chi
    return config.modes.plus(gradientL(u + chi, config))


# ----------------------
#
# Nehari line
#
# ----------------------


class _Line(object):
    """t -> I(t u) with warm-started inner solves"""

    def __init__(self, u, config, guess=None):
        self.u = u
        self.config = config
        self.chi = guess

    def slope(self, t):
        """d/dt I(t u) = <L'(t u + chi(t u)), u>"""
        scaled = t * self.u
        self.chi = innerMaximize(scaled, self.config, self.chi)
        gradient = gradientL(scaled + self.chi, self.config)
        return self.config.modes.inner(gradient, self.u)

    def level(self, t):
        value, self.chi = _reduced(t * self.u, self.config, self.chi)
        return value


def _lineMax(u, config, guess=None, t0=1.0):
    """(t*, chi(t* u), I(t* u)) on the ray through u"""
    if math.sqrt(normEps(u, config)) < 1e-12:
        raise NoSignChangeError("Direction has eps-norm below 1e-12")

    line = _Line(u, config, guess)
    start = line.slope(t0)

    lo = hi = t0
    if start > 0:
        for _ in range(60):
            hi *= 2.0
            if line.slope(hi) < 0:
                break
        else:
            raise NoSignChangeError("d/dt I(t u) stays positive up to t=%g"
                                    % hi)
    elif start < 0:
        for _ in range(60):
            lo *= 0.5
            if line.slope(lo) > 0:
                break
        else:
            raise NoSignChangeError("d/dt I(t u) stays negative down to "
                                    "t=%g" % lo)
    else:
        return t0, line.chi, line.level(t0)

    t_star = optimize.brentq(line.slope, lo, hi, xtol=1e-14 * hi,
                             maxiter=200)
    return t_star, line.chi, line.level(t_star)


def lineMaxT(u, config, verify=False):
    # type: (FourierSpinor, SolverConfig, bool) -> float
    """The unique maximizer t* > 0 of t -> I(t u)

    Raises:
        NoSignChangeError: For degenerate u, or when `verify` finds the
            derivative changing sign other than once

    """

    t_star, _, _ = _lineMax(u, config)

    if verify:
        times, slopes = slopeScan(u, config, t_star)
        changes = np.count_nonzero(np.diff(np.sign(slopes)))
        if changes != 1:
            raise NoSignChangeError("d/dt I(t u) changes sign %d times" %
                                    changes)

    return t_star


def slopeScan(u, config, t_star, count=50):
    """d/dt I(t u) on count points spanning (0, 2 t*]"""
    line = _Line(u, config)
    times = t_star * np.linspace(0.1, 2.0, count)
    return times, np.array([line.slope(t) for t in times])


# ----------------------
#
# Seeds
#
# ----------------------


@functools.lru_cache(maxsize=8)
def _groundState(a, p):
    profile, report = bubble.findGroundState(bubble.BubbleParams(lam=a, p=p))
    return profile, report


def groundLevel(config):
    """mu0 of the planar limit problem with mass a"""
    return _groundState(config.a, config.p)[1].mu0


def cutoff(r, length):
    """1 on r <= L/8, 0 on r >= L/4, a cosine ramp between"""
    inner, outer = length / 8.0, length / 4.0
    ramp = 0.5 * (1 + np.cos(math.pi * (r - inner) / (outer - inner)))
    return np.where(r <= inner, 1.0, np.where(r >= outer, 0.0, ramp))


def bubbleSeed(config, center=None):
    """eta(x - y) psi0((x - y) / eps) for the planar ground state psi0"""
    grid = config.grid
    profile, _ = _groundState(config.a, config.p)
    center = config.center if center is None else center

    X1, X2 = grid.mesh()
    d1, d2 = grid.displacement(X1, X2, center)
    R, T = np.hypot(d1, d2), np.arctan2(d2, d1)

    psi, _, _ = profile.psi(R / config.eps, T)
    values = psi * cutoff(R, min(grid.L1, grid.L2))
    return FourierSpinor.fromPhysical(values, grid)


def randomSeed(config, seed):
    """Gaussian coefficients damped by mu^-2, reproducible per seed"""
    grid = config.grid
    rng = np.random.default_rng(seed)
    shape = (2,) + grid.shape
    coefficients = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    coefficients *= grid.mask / config.modes.mu ** 2
    return FourierSpinor(coefficients, grid)


def makeSeed(config):
    mode, value = config.seed_mode
    if mode == Random:
        return randomSeed(config, value)
    return bubbleSeed(config)


# ----------------------
#
# Outer minimization
#
# ----------------------


class Localization(object):
    """Peak, half-max radius and exponential decay of |psi|"""

    def __init__(self, peak, position, width, decay_c, fit_r2, tie):
        self.peak = peak
        self.position = position
        self.width = width
        self.decay_c = decay_c
        self.fit_r2 = fit_r2
        self.tie = tie

    def __repr__(self):
        return "Localization(peak=%r, width=%.4g, decay_c=%s)" % (
            self.peak, self.width, self.decay_c)

    def dump(self):
        return {
            "peak": list(self.peak),
            "peak_position": list(self.position),
            "width": self.width,
            "decay_c": self.decay_c,
            "fit_r2": self.fit_r2,
            "tie": self.tie,
        }


class SolveResult(object):
    """Critical point found by minimize_nehari and its diagnostics"""

    def __init__(self, psi, config, mu_eps, grad_norm, t_star, iterations,
                 tau0, converged=True):
        self.psi = psi
        self.config = config
        self.mu_eps = mu_eps
        self.grad_norm = grad_norm
        self.t_star = t_star
        self.iterations = iterations
        self.tau0 = tau0
        self.converged = converged
        self._localization = None

    def __repr__(self):
        return "SolveResult(mu_eps=%.10g, grad_norm=%.3g)" % (
            self.mu_eps, self.grad_norm)

    @property
    def localization(self):
        if self._localization is None:
            self._localization = localizationReport(self)
        return self._localization

    @property
    def peak(self):
        return self.localization.peak

    @property
    def width(self):
        return self.localization.width

    @property
    def decay_c(self):
        return self.localization.decay_c

    def dump(self):
        data = {
            "config": self.config.dump(),
            "mu_eps": self.mu_eps,
            "grad_norm": self.grad_norm,
            "t_star": list(self.t_star),
            "iterations": self.iterations,
            "tau0": self.tau0,
            "converged": self.converged,
        }
        data.update(self.localization.dump())
        return data


def tau0(config):
    """Lower bound for the Nehari level of the discretized problem

    From |psi|_inf <= C |psi|_eps, C = eps (L1 L2)^-1/2 (sum 1/mu)^1/2 and
    int |psi|^2 <= eps^2 |psi|_eps^2 / a, every ray satisfies
    I(t u) >= s^2 / 2 - B s^p with s = t |u|_eps and B = C^(p-2) / (p a).

    """

    modes = config.modes
    grid = config.grid
    p = config.p

    constant = config.eps * math.sqrt(np.sum(1.0 / modes.mu[modes.mask]) /
                                      (grid.L1 * grid.L2))
    B = constant ** (p - 2.0) / (p * config.a)
    return (0.5 - 1.0 / p) * (p * B) ** (-2.0 / (p - 2.0))


@withTiming()
def minimizeNehari(config, seed=None):
    # type: (SolverConfig, FourierSpinor) -> SolveResult
    """Descend I along its positive-space gradient on the Nehari set

    Every trial step u - s dI(u) is rescaled onto the Nehari set and
    accepted by an Armijo test; s grows after first-try acceptance and
    halves on rejection.

    Raises:
        SaddleEscapeError: When no trial step lowers the level
        NotConvergedError: After max_outer steps, carrying the last
            iterate as `error.result`

    """

    modes = config.modes
    seed = makeSeed(config) if seed is None else seed
    bound = tau0(config)

    u = modes.plus(seed)
    t, chi, level = _lineMax(u, config)
    u = t * u
    history = [t]
    step = 1.0

    log.info("Solving %r from %s, initial level %.10g" % (
        config, config.seed, level))

    for iteration in range(config.max_outer):
        psi = u + chi
        gradient = gradientL(psi, config)
        grad_norm = math.sqrt(modes.norm2(gradient))

        if grad_norm < config.tol_outer * max(1.0,
                                               math.sqrt(modes.norm2(psi))):
            break

        direction = modes.plus(gradient)
        decrease = modes.norm2(direction)

        for attempt in range(40):
            trial = u - step * direction
            try:
                t, trial_chi, trial_level = _lineMax(trial, config, chi)
            except NoSignChangeError:
                step *= 0.5
                continue

            if trial_level <= level - 1e-4 * step * decrease + \
                    1e-13 * abs(level):
                break

            step *= 0.5

        else:
            raise SaddleEscapeError("No step lowers the level %.12g at "
                                    "gradient %.3g" % (level, grad_norm))

        u, chi, level = t * trial, trial_chi, trial_level
        history.append(t)

        if attempt == 0:
            step = min(2.0 * step, 4.0)

        log.debug("Step %d: level %.14g, gradient %.3g" % (
            iteration, level, grad_norm))

    else:
        error = NotConvergedError("Gradient %.3g after %d steps" % (
            grad_norm, config.max_outer))
        error.result = SolveResult(u + chi, config, level, grad_norm,
                                   history, config.max_outer, bound,
                                   converged=False)
        raise error

    if level < bound:
        log.warning("Level %.6g below the lower bound %.6g" % (level, bound))

    log.info("Converged to %.12g in %d steps, gradient %.3g" % (
        level, iteration, grad_norm))

    return SolveResult(u + chi, config, level, grad_norm, history,
                       iteration, bound)


# ----------------------
#
# Diagnostics
#
# ----------------------


def localizationReport(source, grid=None, eps=None):
    """Peak, half-max width and decay constant of |psi|

    Arguments:
        source (SolveResult or array): A result, or |psi| on `grid`
        grid (TorusGrid, optional): Needed with an array
        eps (float, optional): Needed with an array

    The decay constant c is fitted to log |psi| ~ -c dist / eps over points
    between 1e-6 and 1e-1 of the peak and closer than 0.45 L to it.

    """

    if isinstance(source, SolveResult):
        modulus = source.psi.modulus()
        grid = source.config.grid
        eps = source.config.eps
    else:
        modulus = np.asarray(source, dtype=float)

    top = modulus.max()
    flat = int(np.argmax(modulus))
    peak = np.unravel_index(flat, modulus.shape)
    tie = int(np.count_nonzero(modulus >= top * (1 - 1e-12))) > 1

    X1, X2 = grid.mesh()
    position = (float(X1[peak]), float(X2[peak]))
    d1, d2 = grid.displacement(X1, X2, position)
    distance = np.hypot(d1, d2)
    ratio = modulus / top

    # Radial profile by binning on the grid spacing
    h = min(grid.spacing)
    bins = np.floor(distance / h + 0.5).astype(int).ravel()
    counts = np.bincount(bins)
    filled = counts > 0
    radii = np.bincount(bins, distance.ravel())[filled] / counts[filled]
    means = np.bincount(bins, ratio.ravel())[filled] / counts[filled]

    below = np.nonzero(means <= 0.5)[0]
    if below.size and below[0] > 0:
        i = below[0]
        r0, r1 = radii[i - 1], radii[i]
        m0, m1 = means[i - 1], means[i]
        width = float(r0 + (m0 - 0.5) * (r1 - r0) / (m0 - m1))
    else:
        width = float("nan")

    reach = 0.45 * min(grid.L1, grid.L2)
    window = (ratio >= 1e-6) & (ratio <= 1e-1) & (distance < reach)
    decay_c = fit_r2 = None

    if np.count_nonzero(window) >= 8:
        x = distance[window] / eps
        y = np.log(ratio[window])
        slope, intercept = np.polyfit(x, y, 1)
        residual = y - (slope * x + intercept)
        spread = np.sum((y - y.mean()) ** 2)
        decay_c = float(-slope)
        fit_r2 = float(1 - np.sum(residual ** 2) / spread) if spread else 1.0

    return Localization(tuple(int(i) for i in peak), position, width,
                        decay_c, fit_r2, tie)


def energyDensityLevel(result):
    """eps^-2 int (f(|psi|)|psi|^2 / 2 - F(|psi|)), equal to L at critical
    points"""
    config = result.config
    modulus = result.psi.modulus()
    density = (0.5 * common.nonlinearity(modulus, config.p) * modulus ** 2 -
               common.primitive(modulus, config.p))
    return float(config.grid.cell * np.sum(density) / config.eps ** 2)


def rescaleSolution(result, eps):
    """Warm start for a new eps: psi_old(y + (x - y) eps_old / eps)

    The profile keeps its center y and its width shrinks with eps.

    """

    grid = result.config.grid
    factor = result.config.eps / eps
    values = result.psi.physical(twist=False)

    X1, X2 = grid.mesh()
    y = result.localization.position
    d1, d2 = grid.displacement(X1, X2, y)
    h1, h2 = grid.spacing
    coordinates = [(y[0] + factor * d1) / h1, (y[1] + factor * d2) / h2]

    mapped = np.empty_like(values)
    for index in range(2):
        mapped[index] = (
            ndimage.map_coordinates(values[index].real, coordinates,
                                    order=3, mode="grid-wrap") +
            1j * ndimage.map_coordinates(values[index].imag, coordinates,
                                         order=3, mode="grid-wrap")
        )

    return FourierSpinor.fromPhysical(mapped, grid, twist=False)


@withTiming()
def sweepEps(eps_list, config):
    """minimize_nehari along a decreasing eps list, warm-starting each run

    A failing run is recorded with its error code and the sweep continues
    from the last successful solution.

    Returns:
        List of rows {eps, mu_eps, width, decay_c, grad_norm, status}

    """

    eps_list = [float(eps) for eps in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must decrease, got %s" % eps_list)

    rows = []
    previous = None

    for eps in eps_list:
        current = config.replace(eps=eps)
        seed = rescaleSolution(previous, eps) if previous else None

        try:
            result = minimizeNehari(current, seed)
        except SylabError as e:
            log.warning("eps=%g failed: %s" % (eps, e))
            rows.append({
                "eps": eps,
                "mu_eps": float("nan"),
                "width": float("nan"),
                "decay_c": float("nan"),
                "grad_norm": float("nan"),
                "status": e.code,
            })
            continue

        previous = result
        rows.append({
            "eps": eps,
            "mu_eps": result.mu_eps,
            "width": result.width,
            "decay_c": result.decay_c,
            "grad_norm": result.grad_norm,
            "status": "OK",
        })

    return rows


def quasiCriticalScan(result, direction, scales):
    """Quasi-critical points phi = psi + s eta near a solution

    For each s reports L(phi), |L'(phi)|, the Nehari maximum
    max_t I(t phi+) with its t_phi, the gap max_t I(t phi+) - L(phi) and
    |phi- - chi(phi+)|, which shrink like |L'(phi)|^2, |L'(phi)| and
    |L'(phi)| respectively.

    """

    config = result.config
    modes = config.modes
    rows = []

    for s in scales:
        phi = result.psi + s * direction
        positive, negative = modes.plus(phi), modes.minus(phi)

        level = energyL(phi, config)
        grad_norm = gradientNorm(phi, config)
        t_phi, _, top = _lineMax(positive, config, negative)
        chi = innerMaximize(positive, config, negative)

        rows.append({
            "s": float(s),
            "L": level,
            "grad_norm": grad_norm,
            "max_I": top,
            "gap": top - level,
            "t_phi": t_phi,
            "chi_gap": math.sqrt(modes.norm2(negative - chi)),
        })

    return rows


def compareSeeds(config, seeds):
    """Solve from several seeds, returning the lowest result and all levels

    Runs that fail map to None in the levels.

    """

    def run(seed):
        try:
            return minimizeNehari(config.replace(seed=seed))
        except SylabError as e:
            log.warning("Seed %s failed: %s" % (seed, e))
            return None

    with common.workers(len(seeds)) as pool:
        results = list(pool.map(run, seeds))

    levels = {seed: (result.mu_eps if result else None)
              for seed, result in zip(seeds, results)}

    finished = [result for result in results if result is not None]
    if not finished:
        raise NotConvergedError("No seed converged among %s" % (seeds,))

    best = min(finished, key=lambda result: result.mu_eps)
    log.info("Lowest level %.12g from seed %s" % (best.mu_eps,
                                                  best.config.seed))
    return best, levels


def padSpinor(psi, grid):
    """Zero-pad Fourier coefficients onto a finer grid"""
    coarse = psi.grid
    j1, j2 = coarse.integers()
    rows = (j1.astype(int) % grid.N1)[:, None]
    columns = (j2.astype(int) % grid.N2)[None, :]

    coefficients = np.zeros((2,) + grid.shape, dtype=complex)
    coefficients[:, rows, columns] = psi.coefficients
    return FourierSpinor(coefficients * grid.mask, grid)


def refinementDelta(config, coarse_N):
    """|mu_eps(N) - mu_eps(coarse_N)|, the fine solve warm-started"""
    grid = config.grid
    coarse_grid = TorusGrid(coarse_N, coarse_N * grid.N2 // grid.N1,
                            grid.L1, grid.L2, grid.delta)

    coarse = minimizeNehari(config.replace(grid=coarse_grid.dump()))
    fine = minimizeNehari(config, padSpinor(coarse.psi, grid))

    return {
        "N_coarse": coarse_grid.N1,
        "N_fine": grid.N1,
        "mu_coarse": coarse.mu_eps,
        "mu_fine": fine.mu_eps,
        "delta": abs(fine.mu_eps - coarse.mu_eps),
    }


# ----------------------
#
# Files
#
# ----------------------


def saveResult(result, path):
    with open(path, "w") as f:
        json.dump(result.dump(), f, indent=2, sort_keys=True)


def saveField(result, path):
    """|psi| on the grid as CSV i,j,abs_psi"""
    modulus = result.psi.modulus()
    I, J = np.indices(modulus.shape)
    np.savetxt(path, np.column_stack([I.ravel(), J.ravel(), modulus.ravel()]),
               delimiter=",", header="i,j,abs_psi", comments="",
               fmt=("%d", "%d", "%.17g"))


def saveSweep(rows, path):
    """Sweep rows as CSV, missing values written as nan"""
    table = [[float("nan") if row[column] is None else row[column]
              for column in SweepColumns] for row in rows]
    np.savetxt(path, np.array(table, dtype=float).reshape(-1, 5),
               delimiter=",", header=",".join(SweepColumns), comments="",
               fmt="%.17g")


if ENABLE_PEP8:
    parse_seed = parseSeed
    load_config = loadConfig
    norm_eps = normEps
    energy_L = energyL
    gradient_L = gradientL
    gradient_norm = gradientNorm
    inner_maximize = innerMaximize
    reduced_I = reducedI
    reduced_gradient = reducedGradient
    line_max_t = lineMaxT
    slope_scan = slopeScan
    ground_level = groundLevel
    bubble_seed = bubbleSeed
    random_seed = randomSeed
    make_seed = makeSeed
    minimize_nehari = minimizeNehari
    localization_report = localizationReport
    energy_density_level = energyDensityLevel
    rescale_solution = rescaleSolution
    sweep_eps = sweepEps
    quasi_critical_scan = quasiCriticalScan
    compare_seeds = compareSeeds
    pad_spinor = padSpinor
    refinement_delta = refinementDelta
    save_result = saveResult
    save_field = saveField
    save_sweep = saveSweep
