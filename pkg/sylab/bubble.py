# -*- coding: utf-8 -*-
"""Ground states of the limit equation on the plane

The limit equation D psi + lam gamma3 psi = |psi|^(p-2) psi is reduced by
the ansatz

    psi(r, theta) = (v(r) exp(i S theta), i u(r) exp(i (S+1) theta))

to the radial system

    u' = -(S+1) u / r - (f(rho) - lam) v
    v' =      S v / r + (f(rho) + lam) u,     rho = sqrt(u^2 + v^2)

whose decaying solution is found by shooting on v0 = lim v / r^S at the
origin and cross-checked by collocation.

"""

import json
import math
import logging

import numpy as np
from scipy import integrate, interpolate, special

from . import common
from .common import (
    withTiming,
    Stats,
    NoBracketError,
    NotConvergedError,
    IntegrationError,
    DecayError,
)
from .clifford import Clifford, applyMatrix

log = logging.getLogger("sylab.bubble")

ENABLE_PEP8 = True

# Shooting classifications
Decays = "DECAYS"
VCrossesZero = "V_CROSSES_ZERO"
UDominates = "U_DOMINATES"


class BubbleParams(object):
    """Parameters of one radial ground-state computation

    Arguments:
        lam (float): Mass, > 0
        p (float): Exponent in (2, 4)
        S (int): Winding number, >= 0
        r_max (float, optional): Truncation radius, defaults to 20 / lam
        tol_shoot (float): Tail amplitude regarded as decayed
        tol_ode (float): Relative tolerance of the integrator
        max_bisect (int): Bisection iteration cap

    Example:
        >>> params = BubbleParams(lam=2.0)
        >>> params.r_max
        10.0
        >>> BubbleParams(p=5)
        Traceback (most recent call last):
        ...
        ValueError: p must lie in (2, 4), got 5.0

    """

    def __init__(self,
                 lam=1.0,
                 p=3.0,
                 S=0,
                 r_max=None,
                 tol_shoot=1e-8,
                 tol_ode=1e-10,
                 max_bisect=200,
                 r0=1e-6,
                 samples=4001,
                 scan_points=33,
                 blowup=10.0):

        if lam <= 0:
            raise ValueError("lam must be positive, got %s" % lam)

        if int(S) != S or S < 0:
            raise ValueError("S must be a non-negative integer, got %s" % S)

        if samples < 5 or samples % 2 == 0:
            raise ValueError("samples must be odd and >= 5, got %s" % samples)

        self.lam = float(lam)
        self.p = common.checkExponent(p)
        self.S = int(S)
        self.r_max = float(r_max) if r_max else 20.0 / self.lam
        self.tol_shoot = tol_shoot
        self.tol_ode = tol_ode
        self.max_bisect = int(max_bisect)
        self.r0 = r0
        self.samples = int(samples)
        self.scan_points = int(scan_points)
        self.blowup = blowup

    def __repr__(self):
        return "BubbleParams(lam=%r, p=%r, S=%r)" % (self.lam, self.p, self.S)

    @property
    def scale(self):
        """Amplitude scale lam^(1/(p-2)) of the scaling map"""
        return self.lam ** (1.0 / (self.p - 2.0))

    def replace(self, **kwargs):
        data = self.dump()
        data.update(kwargs)
        return type(self).load(data)

    def dump(self):
        return {
            "lam": self.lam,
            "p": self.p,
            "S": self.S,
            "r_max": self.r_max,
            "tol_shoot": self.tol_shoot,
            "tol_ode": self.tol_ode,
            "max_bisect": self.max_bisect,
            "r0": self.r0,
            "samples": self.samples,
            "scan_points": self.scan_points,
            "blowup": self.blowup,
        }

    @classmethod
    def load(cls, data):
        return cls(**data)


class RadialProfile(object):
    """Radial data (r, u, v) of an ansatz spinor

    Radii start at 0 and increase strictly. Beyond the last radius the
    profile continues as C exp(-c r) with (C, c) from `decay_fit`.

    """

    def __init__(self, r, u, v, params):
        r = np.asarray(r, dtype=float)
        assert r.ndim == 1 and r[0] == 0.0, "Radii must start at 0"
        assert np.all(np.diff(r) > 0), "Radii must increase strictly"

        self.r = r
        self.u = np.asarray(u, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.params = params

        self._spline = None
        self._tail = None

    def __repr__(self):
        return "RadialProfile(%d samples, r_end=%.4g, %r)" % (
            len(self.r), self.r[-1], self.params)

    def __len__(self):
        return len(self.r)

    @property
    def rho(self):
        return np.hypot(self.u, self.v)

    def isZero(self):
        return not np.any(self.rho > 0)

    def spline(self):
        """Quintic interpolant of (u, v), built once"""
        if self._spline is None:
            self._spline = interpolate.make_interp_spline(
                self.r, np.column_stack([self.u, self.v]), k=5
            )
        return self._spline

    def tail(self):
        """(C, c) of the exponential continuation beyond the last radius"""
        if self._tail is None:
            self._tail = _fitTail(self)
        return self._tail

    def evaluate(self, r):
        """Return u, v, u', v' at radii r, continuing the tail analytically"""
        r = np.asarray(r, dtype=float)
        inside = r <= self.r[-1]
        spline = self.spline()
        derivative = spline.derivative()

        rin = np.where(inside, r, self.r[-1])
        values = spline(rin)
        slopes = derivative(rin)
        u, v = values[..., 0], values[..., 1]
        du, dv = slopes[..., 0], slopes[..., 1]

        if not np.all(inside):
            _, rate = self.tail() if not self.isZero() else (0.0, 0.0)
            damp = np.exp(-rate * np.where(inside, 0.0, r - self.r[-1]))
            u = np.where(inside, u, self.u[-1] * damp)
            v = np.where(inside, v, self.v[-1] * damp)
            du = np.where(inside, du, -rate * u)
            dv = np.where(inside, dv, -rate * v)

        return u, v, du, dv

    def psi(self, r, theta):
        """The ansatz spinor and its polar derivatives

        Returns:
            (psi, d_r psi, d_theta psi / r), each of shape (2, ...)

        """

        S = self.params.S
        u, v, du, dv = self.evaluate(r)
        _, _, du0, dv0 = self.evaluate(0.0)

        # u/r and v/r stay finite at the origin
        safe = np.where(r > 0, r, 1.0)
        u_r = np.where(r > 0, u / safe, du0)
        v_r = np.where(r > 0, v / safe, dv0)

        lower = np.exp(1j * S * theta)
        upper = np.exp(1j * (S + 1) * theta)

        psi = np.stack([v * lower, 1j * u * upper])
        radial = np.stack([dv * lower, 1j * du * upper])
        angular = np.stack([1j * S * v_r * lower, -(S + 1) * u_r * upper])

        return psi, radial, angular


class BubbleReport(object):
    """Summary of a ground-state computation"""

    def __init__(self, v0_star, mu0, decay_rate, residual_2d, moments,
                 params=None, r_cut=None, iterations=0, method="shooting"):
        self.v0_star = v0_star
        self.mu0 = mu0
        self.decay_rate = decay_rate
        self.residual_2d = residual_2d
        self.moments = moments
        self.params = params
        self.r_cut = r_cut
        self.iterations = iterations
        self.method = method

    def __repr__(self):
        return "BubbleReport(v0_star=%.12g, mu0=%.12g)" % (
            self.v0_star, self.mu0)

    def dump(self):
        return {
            "v0_star": self.v0_star,
            "mu0": self.mu0,
            "decay_rate": self.decay_rate,
            "residual_2d": self.residual_2d,
            "moments": dict(self.moments),
            "params": self.params.dump() if self.params else None,
            "r_cut": self.r_cut,
            "iterations": self.iterations,
            "method": self.method,
        }


class Trajectory(object):
    """One shooting trajectory with its dense interpolant"""

    __slots__ = ("v0", "r", "u", "v", "dense", "r_end")

    def __init__(self, v0, r, u, v, dense, r_end):
        self.v0 = v0
        self.r = r
        self.u = u
        self.v = v
        self.dense = dense
        self.r_end = r_end

    def __repr__(self):
        return "Trajectory(v0=%.17g, r_end=%.4g)" % (self.v0, self.r_end)

    def __call__(self, r):
        if self.dense is None:
            return np.zeros((2,) + np.shape(r))
        return self.dense(r)


def radialRhs(r, u, v, params):
    """Right-hand side (du, dv) of the radial system

    Example:
        >>> radialRhs(1.0, 0.0, 0.0, BubbleParams()) == (0.0, 0.0)
        True

    """

    if np.any(np.asarray(r) <= 0):
        raise ValueError("radial_rhs needs r > 0, use the origin series at 0")

    lam, S = params.lam, params.S
    f = common.nonlinearity(np.hypot(u, v), params.p)

    du = -(S + 1) * u / r - (f - lam) * v
    dv = S * v / r + (f + lam) * u

    return du, dv


def _rhsJacobian(r, u, v, params):
    lam, S, q = params.lam, params.S, params.p - 2.0
    rho = np.maximum(np.hypot(u, v), 1e-300)
    f = rho ** q
    df = q * rho ** (q - 2.0)

    return np.array([
        [-(S + 1) / r - df * u * v, -(f - lam) - df * v * v],
        [(f + lam) + df * u * u, S / r + df * u * v],
    ])


def originSeries(v0, r, params):
    """Regular solution near the origin, u ~ c1 r^(S+1), v ~ v0 r^S

    Example:
        >>> u, v = originSeries(2.0, 1e-6, BubbleParams())
        >>> round(u / 1e-6, 6), round(v, 6)
        (-1.0, 2.0)

    """

    lam, S = params.lam, params.S
    v_lead = v0 * r ** S
    f = common.nonlinearity(abs(v_lead), params.p)

    c1 = -(f - lam) * v0 / (2.0 * (S + 1))
    c2 = (f + lam) * c1 / 2.0

    return c1 * r ** (S + 1), v_lead + c2 * r ** (S + 2)


def _classifyEnd(r, u, v, params):
    rho = math.hypot(u, v)
    if rho < params.tol_shoot:
        return Decays

    # Far out the tail is a sum of modes with u ~ v (growing) and
    # u ~ -v (decaying); the growing one decides which way it leaves
    return UDominates if u + v > 0 else VCrossesZero


@withTiming()
def shoot(v0, params):
    # type: (float, BubbleParams) -> tuple
    """Integrate outward from the origin and classify the tail

    Arguments:
        v0 (float): Leading coefficient lim v / r^S at the origin
        params (BubbleParams): System parameters

    Returns:
        (Trajectory, classification)

    V_CROSSES_ZERO when v falls through zero, U_DOMINATES when u rises
    through zero first (v then grows again), DECAYS when neither happens
    and the tail has fallen below tol_shoot by r_max.

    Example:
        >>> trajectory, kind = shoot(0.0, BubbleParams())
        >>> kind
        'DECAYS'

    """

    if v0 < 0:
        raise ValueError("v0 must be non-negative, got %s" % v0)

    Stats.ShootCount += 1
    r0 = params.r0

    if v0 == 0:
        r = np.array([r0, params.r_max])
        return Trajectory(0.0, r, np.zeros(2), np.zeros(2), None,
                          params.r_max), Decays

    threshold = params.blowup * max(v0, params.scale)

    def crossing(r, y):
        return y[1]

    def blowup(r, y):
        return abs(y[0]) + abs(y[1]) - threshold

    def turning(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1
    blowup.terminal = True
    blowup.direction = 1

    # u rising through zero makes v grow again before it reached zero
    turning.terminal = True
    turning.direction = 1

    def rhs(r, y):
        return radialRhs(r, y[0], y[1], params)

    u0, w0 = originSeries(v0, r0, params)
    solution = integrate.solve_ivp(
        rhs, (r0, params.r_max), [u0, w0],
        method="DOP853",
        rtol=params.tol_ode,
        atol=1e-3 * params.tol_ode * params.scale,
        dense_output=True,
        events=[crossing, blowup, turning],
    )

    if solution.status == -1:
        raise IntegrationError(
            "Integration failed for v0=%r: %s" % (v0, solution.message))

    r, (u, v) = solution.t, solution.y
    trajectory = Trajectory(v0, r, u, v, solution.sol, r[-1])

    if params.S == 0 and u0 >= 0:
        # At or below the constant solution v never starts to fall
        kind = UDominates
    elif solution.t_events[0].size:
        kind = VCrossesZero
    elif solution.t_events[1].size or solution.t_events[2].size:
        kind = UDominates
    else:
        kind = _classifyEnd(r[-1], u[-1], v[-1], params)

    return trajectory, kind


def _scan(params):
    if params.S == 0:
        # Below lam^(1/(p-2)) every shot is trapped near the constant solution
        low, high = 1.0 + 1e-3, 1e2
    else:
        low, high = 1e-2, 1e2

    candidates = np.geomspace(low, high, params.scan_points) * params.scale

    def classify(v0):
        return shoot(v0, params)[1]

    with common.workers() as pool:
        kinds = list(pool.map(classify, candidates))

    log.debug("Scanned %d candidates: %s" % (
        len(candidates), ", ".join(kinds)))

    return candidates, kinds


def _bracket(params):
    """Lowest v0 interval where the tail turns from growth to crossing"""
    candidates, kinds = _scan(params)

    for index, kind in enumerate(kinds):
        if kind == Decays:
            return candidates[index], candidates[index]

    for index in range(len(kinds) - 1):
        if kinds[index] == UDominates and kinds[index + 1] == VCrossesZero:
            return candidates[index], candidates[index + 1]

    raise NoBracketError(
        "Classifications never change on v0 in [%.3g, %.3g] for %r" % (
            candidates[0], candidates[-1], params))


def _separation(low, high, params):
    """First radius where the bracketing trajectories part by 1e-4"""
    r_end = min(low.r_end, high.r_end)
    r = np.linspace(params.r0, r_end, params.samples)
    rho_low = np.hypot(*low(r))
    rho_high = np.hypot(*high(r))

    scale = np.maximum(0.5 * (rho_low + rho_high), 1e-300)
    apart = np.nonzero(np.abs(rho_low - rho_high) > 1e-4 * scale)[0]

    if apart.size:
        return r[max(apart[0] - 1, 1)]

    return r_end


@withTiming()
def findGroundState(params):
    # type: (BubbleParams) -> tuple
    """Zero-node decaying solution of the radial system

    Returns:
        (RadialProfile, BubbleReport)

    Raises:
        NoBracketError: When the scanned classifications never change
        NotConvergedError: When max_bisect is exhausted

    """

    lo, hi = _bracket(params)
    log.debug("Bracket [%.17g, %.17g]" % (lo, hi))

    iterations = 0
    while hi - lo > 1e-14 * hi:
        if iterations >= params.max_bisect:
            raise NotConvergedError(
                "Bisection did not converge in %d steps, bracket [%r, %r]"
                % (params.max_bisect, lo, hi))

        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break

        iterations += 1
        kind = shoot(mid, params)[1]

        if kind == UDominates:
            lo = mid
        elif kind == VCrossesZero:
            hi = mid
        else:
            lo = hi = mid

    v0_star = 0.5 * (lo + hi)
    low, _ = shoot(lo, params)
    high, _ = shoot(hi, params)
    middle, _ = shoot(v0_star, params)

    r_cut = min(_separation(low, high, params), middle.r_end)
    r = np.linspace(0.0, r_cut, params.samples)
    u, v = middle(np.maximum(r, params.r0))
    u[0] = 0.0
    v[0] = v0_star if params.S == 0 else 0.0

    profile = RadialProfile(r, u, v, params)
    report = _report(profile, v0_star, iterations, "shooting")

    log.info("Ground state lam=%g p=%g S=%d: v0*=%.12g mu0=%.12g" % (
        params.lam, params.p, params.S, v0_star, report.mu0))

    return profile, report


def _report(profile, v0_star, iterations, method):
    residual = fullResidual(profile)
    return BubbleReport(
        v0_star=float(v0_star),
        mu0=energy(profile),
        decay_rate=decayFit(profile),
        residual_2d=residual.value,
        moments=momentIntegrals(profile),
        params=profile.params,
        r_cut=float(profile.r[-1]),
        iterations=iterations,
        method=method,
    )


@withTiming()
def collocate(params, guess=None, radius=None, tol=1e-10):
    """Relaxation solve of the radial system on [r0, R]

    The origin is closed by the regular series u = c1(v) r^(S+1) and the
    far end by the Robin condition of the linearized tail,

        u(R) K_S(lam R) + v(R) K_{S+1}(lam R) = 0,

    satisfied exactly by the decaying Bessel modes.

    Arguments:
        params (BubbleParams): System parameters
        guess (RadialProfile, optional): Initial iterate, by default a
            coarse resampling of the shooting profile
        radius (float, optional): Outer radius R, default 12 / lam
        tol (float): Collocation residual tolerance

    Returns:
        (RadialProfile, BubbleReport)

    """

    lam, S, r0 = params.lam, params.S, params.r0
    radius = radius or 12.0 / lam

    if guess is None:
        guess, _ = findGroundState(params)

    mesh = np.linspace(r0, min(radius, guess.r[-1]), 201)
    u_guess, v_guess, _, _ = guess.evaluate(mesh)

    if mesh[-1] < radius:
        mesh = np.append(mesh, radius)
        u_guess, v_guess, _, _ = guess.evaluate(mesh)

    k_lo = special.kve(S, lam * radius)
    k_hi = special.kve(S + 1, lam * radius)

    def fun(r, y):
        return np.vstack(radialRhs(r, y[0], y[1], params))

    def jac(r, y):
        return _rhsJacobian(r, y[0], y[1], params)

    def bc(ya, yb):
        f = common.nonlinearity(abs(ya[1]), params.p)
        origin = ya[0] + (f - lam) * ya[1] * r0 / (2.0 * (S + 1))
        return np.array([origin, yb[0] * k_lo + yb[1] * k_hi])

    result = integrate.solve_bvp(fun, bc, mesh, np.vstack([u_guess, v_guess]),
                                 fun_jac=jac, tol=tol, max_nodes=400000)

    if result.status != 0:
        raise NotConvergedError("Collocation failed: %s" % result.message)

    r = np.linspace(0.0, radius, params.samples)
    u, v = result.sol(np.maximum(r, r0))
    v0 = float(v[0]) / r0 ** S
    u[0] = 0.0
    v[0] = v0 if S == 0 else 0.0

    profile = RadialProfile(r, u, v, params)
    report = _report(profile, v0, result.niter, "collocation")

    log.info("Collocation lam=%g p=%g: %d nodes, mu0=%.12g" % (
        lam, params.p, result.x.size, report.mu0))

    return profile, report


def rescale(profile, lam):
    """Carry a profile to mass lam by phi(x) = s^(1/(p-2)) psi(s x)

    Example:
        >>> r = np.linspace(0, 4, 5)
        >>> profile = RadialProfile(r, 0 * r, np.exp(-r), BubbleParams())
        >>> scaled = rescale(profile, 2.0)
        >>> scaled.r.tolist(), scaled.params.lam
        ([0.0, 0.5, 1.0, 1.5, 2.0], 2.0)
        >>> rescale(profile, 1.0).v.tolist() == profile.v.tolist()
        True

    """

    params = profile.params
    factor = lam / params.lam
    amplitude = factor ** (1.0 / (params.p - 2.0))

    return RadialProfile(
        profile.r / factor,
        amplitude * profile.u,
        amplitude * profile.v,
        params.replace(lam=float(lam), r_max=params.r_max / factor),
    )


def energy(profile):
    """Limit energy 2 pi (1/2 - 1/p) int rho^p r dr of a critical point

    Example:
        >>> r = np.linspace(0, 40, 4001)
        >>> profile = RadialProfile(r, 0 * r, np.exp(-r), BubbleParams())
        >>> round(energy(profile) / (math.pi / 27), 6)
        1.0

    """

    p = profile.params.p
    if profile.isZero():
        return 0.0
    return 2.0 * math.pi * (0.5 - 1.0 / p) * momentIntegrals(profile)["I_p0"]


class Residual(object):
    __slots__ = ("value", "degenerate")

    def __init__(self, value, degenerate=False):
        self.value = value
        self.degenerate = degenerate

    def __repr__(self):
        return "Residual(%.3g%s)" % (
            self.value, ", degenerate" if self.degenerate else "")

    def __float__(self):
        return float(self.value)


def _polar(profile, n_theta):
    r = profile.r
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(r, theta, indexing="ij")
    return R, T


def _cartesianDerivatives(profile, R, T):
    psi, radial, angular = profile.psi(R, T)
    cos, sin = np.cos(T), np.sin(T)
    d1 = cos * radial - sin * angular
    d2 = sin * radial + cos * angular
    return psi, d1, d2


def _diracMass(psi, d1, d2, lam):
    return (applyMatrix(Clifford.gamma1, d1) +
            applyMatrix(Clifford.gamma2, d2) +
            lam * applyMatrix(Clifford.gamma3, psi))


def _radialIntegral(profile, values):
    """int_0^R int_0^2pi values r dtheta dr, values shaped (r, theta)"""
    angular = 2.0 * math.pi * values.mean(axis=1)
    return integrate.simpson(angular * profile.r, x=profile.r)


def fullResidual(profile, n_theta=32):
    """Relative L2 residual of the reconstructed 2D spinor

    Applies D + lam gamma3 - |psi|^(p-2) on a polar grid with analytic
    angular derivatives. A zero profile has no scale to compare against
    and yields a degenerate zero.

    """

    if profile.isZero():
        log.warning("Residual of a zero profile is degenerate")
        return Residual(0.0, degenerate=True)

    params = profile.params
    R, T = _polar(profile, n_theta)
    psi, d1, d2 = _cartesianDerivatives(profile, R, T)

    nonlinear = common.nonlinearity(np.sqrt(np.sum(np.abs(psi) ** 2, axis=0)),
                                    params.p) * psi
    residual = _diracMass(psi, d1, d2, params.lam) - nonlinear

    top = _radialIntegral(profile, np.sum(np.abs(residual) ** 2, axis=0))
    bottom = _radialIntegral(profile, np.sum(np.abs(nonlinear) ** 2, axis=0))

    return Residual(float(math.sqrt(top / bottom)))


def phiFunctional(profile, n_theta=16):
    """Limit functional 1/2 int Re(A psi, psi) - int F(|psi|) by quadrature

    A = D + lam gamma3 is applied with analytic angular derivatives, so
    comparing against `energy` tests Phi'(psi)[psi] = 0.

    """

    params = profile.params
    R, T = _polar(profile, n_theta)
    psi, d1, d2 = _cartesianDerivatives(profile, R, T)

    quadratic = np.sum(_diracMass(psi, d1, d2, params.lam) * np.conj(psi),
                       axis=0).real
    modulus = np.sqrt(np.sum(np.abs(psi) ** 2, axis=0))

    return float(_radialIntegral(profile, 0.5 * quadratic) -
                 _radialIntegral(profile, common.primitive(modulus, params.p)))


def _tailWindow(profile):
    start = 2 * len(profile.r) // 3
    r = profile.r[start:]
    rho = profile.rho[start:]
    valid = rho > 0

    if not np.any(valid):
        raise DecayError("Tail underflow, rho vanishes beyond r=%.4g" % r[0])

    if np.count_nonzero(valid) < 3:
        raise DecayError("Too few positive tail samples to fit a decay rate")

    return r[valid], rho[valid]


def _fitTail(profile):
    r, rho = _tailWindow(profile)
    slope, intercept = np.polyfit(r, np.log(rho), 1)
    return math.exp(intercept), -slope


def decayFit(profile):
    """Negated least-squares slope of log rho on the last third

    Example:
        >>> r = np.linspace(0, 20, 2001)
        >>> profile = RadialProfile(r, 0 * r, np.exp(-r), BubbleParams())
        >>> round(decayFit(profile), 9)
        1.0

    """

    _, rate = profile.tail()
    if rate <= 0:
        raise DecayError("Tail does not decay, fitted rate %.4g" % rate)
    return rate


def _tailMoment(amplitude, rate, radius, power):
    """int_R^inf (C exp(-c r))^p r^k dr for k = 1 or 3, in closed form"""
    a = power[0] * rate
    k = power[1]
    head = amplitude ** power[0] * math.exp(-a * radius)

    if k == 1:
        return head * (radius / a + 1.0 / a ** 2)

    return head * (radius ** 3 / a + 3.0 * radius ** 2 / a ** 2 +
                   6.0 * radius / a ** 3 + 6.0 / a ** 4)


def momentIntegrals(profile):
    """Simpson quadrature of int rho^p r dr and int rho^p r^3 dr

    Both include the analytic contribution of the exponential tail.

    Example:
        >>> r = np.linspace(0, 30, 3001)
        >>> profile = RadialProfile(r, 0 * r, np.exp(-r), BubbleParams())
        >>> moments = momentIntegrals(profile)
        >>> round(moments["I_p0"] * 9, 6), round(moments["I_p2"] * 81 / 6, 6)
        (1.0, 1.0)

    """

    p = profile.params.p
    r = profile.r
    weight = profile.rho ** p

    moments = {
        "I_p0": float(integrate.simpson(weight * r, x=r)),
        "I_p2": float(integrate.simpson(weight * r ** 3, x=r)),
    }

    if profile.isZero():
        return moments

    amplitude, rate = profile.tail()
    if rate > 0:
        moments["I_p0"] += _tailMoment(amplitude, rate, r[-1], (p, 1))
        moments["I_p2"] += _tailMoment(amplitude, rate, r[-1], (p, 3))

    return moments


def radialMoment(profile, weight):
    """int weight(r, u, v) dr over the profile grid, without tail"""
    return float(integrate.simpson(
        weight(profile.r, profile.u, profile.v), x=profile.r))


class SpinorField(object):
    """Spinor psi of shape (2, n1, n2) and derivatives on a square grid

    Arguments:
        x1, x2 (array): Uniform grid coordinates
        psi (array): Values, shape (2, n1, n2)
        dpsi (array): Partial derivatives, shape (2, 2, n1, n2) with the
            direction first
        p (float): Exponent of the nonlinearity

    """

    def __init__(self, x1, x2, psi, dpsi, p):
        self.x1 = np.asarray(x1, dtype=float)
        self.x2 = np.asarray(x2, dtype=float)
        self.psi = psi
        self.dpsi = dpsi
        self.p = p

    def __repr__(self):
        return "SpinorField(%dx%d)" % (len(self.x1), len(self.x2))

    @property
    def cell(self):
        return (self.x1[1] - self.x1[0]) * (self.x2[1] - self.x2[0])

    def mesh(self):
        return np.meshgrid(self.x1, self.x2, indexing="ij")

    def modulus(self):
        return np.sqrt(np.sum(np.abs(self.psi) ** 2, axis=0))

    def boundaryLevel(self):
        """Largest |psi| on the grid boundary relative to its maximum"""
        modulus = self.modulus()
        edge = max(modulus[0].max(), modulus[-1].max(),
                   modulus[:, 0].max(), modulus[:, -1].max())
        peak = modulus.max()
        return edge / peak if peak > 0 else 0.0

    @classmethod
    def fromValues(cls, x1, x2, psi, p):
        """Spectral derivatives of gridded values decaying at the edges"""
        psi = np.asarray(psi, dtype=complex)
        k1 = 2 * math.pi * np.fft.fftfreq(len(x1), x1[1] - x1[0])
        k2 = 2 * math.pi * np.fft.fftfreq(len(x2), x2[1] - x2[0])
        spectrum = np.fft.fft2(psi, axes=(1, 2))
        dpsi = np.stack([
            np.fft.ifft2(1j * k1[:, None] * spectrum, axes=(1, 2)),
            np.fft.ifft2(1j * k2[None, :] * spectrum, axes=(1, 2)),
        ])
        return cls(x1, x2, psi, dpsi, p)

    if ENABLE_PEP8:
        boundary_level = boundaryLevel
        from_values = fromValues


def spinorField(profile, half_width=None, spacing=None):
    """Reconstruct the ansatz spinor on a Cartesian grid

    Arguments:
        profile (RadialProfile): Source profile
        half_width (float, optional): Default 28 / decay rate
        spacing (float, optional): Default 0.08 / decay rate

    """

    rate = decayFit(profile)
    half_width = half_width or 28.0 / rate
    spacing = spacing or 0.08 / rate

    count = int(round(2 * half_width / spacing)) + 1
    x = np.linspace(-half_width, half_width, count)
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    R, T = np.hypot(X1, X2), np.arctan2(X2, X1)

    psi, d1, d2 = _cartesianDerivatives(profile, R, T)
    return SpinorField(x, x, psi, np.stack([d1, d2]), profile.params.p)


def windingComparison(params, windings=(0, 1)):
    """Ground-state energy per winding number, None where none is found"""
    energies = {}
    for S in windings:
        try:
            _, report = findGroundState(params.replace(S=S))
        except (NoBracketError, NotConvergedError) as e:
            log.warning("No ground state for S=%d: %s" % (S, e))
            energies[S] = None
        else:
            energies[S] = report.mu0

    known = {S: mu for S, mu in energies.items() if mu is not None}
    if known:
        lowest = min(known, key=lambda S: (known[S], S))
        log.info("Lowest energy at S=%d: %.12g" % (lowest, known[lowest]))

    return energies


# ----------------------
#
# Files
#
# ----------------------


def saveProfile(profile, path):
    """Write `r,u,v` with full round-trip precision"""
    params = profile.params
    header = "# sylab profile lam=%r p=%r S=%d\nr,u,v" % (
        params.lam, params.p, params.S)
    np.savetxt(path, np.column_stack([profile.r, profile.u, profile.v]),
               delimiter=",", header=header, comments="", fmt="%.17g")


def loadProfile(path, params=None):
    """Read a profile written by `save_profile`"""
    with open(path) as f:
        first = f.readline()

    if params is None:
        params = BubbleParams()
        if first.startswith("#"):
            fields = dict(item.split("=") for item in first.split()[3:])
            params = BubbleParams(lam=float(fields["lam"]),
                                  p=float(fields["p"]),
                                  S=int(fields["S"]))

    skip = 2 if first.startswith("#") else 1
    table = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
    return RadialProfile(table[:, 0], table[:, 1], table[:, 2], params)


def saveReport(report, path):
    with open(path, "w") as f:
        json.dump(report.dump(), f, indent=2, sort_keys=True)


if ENABLE_PEP8:
    radial_rhs = radialRhs
    origin_series = originSeries
    find_ground_state = findGroundState
    full_residual = fullResidual
    phi_functional = phiFunctional
    decay_fit = decayFit
    moment_integrals = momentIntegrals
    radial_moment = radialMoment
    spinor_field = spinorField
    winding_comparison = windingComparison
    save_profile = saveProfile
    load_profile = loadProfile
    save_report = saveReport
