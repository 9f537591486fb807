# -*- coding: utf-8 -*-
"""Curvature, normal coordinates and the concentration functional Theta

Conventions

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R(X, Y, Z, W) = g(R(X, Y)Z, W)

so that K = R(e1, e2, e2, e1) > 0 on the round sphere. Orthonormal frames
come from Gram-Schmidt on (d_s, d_t) in that order.

"""

import json
import math
import logging

import numpy as np
from scipy import integrate, interpolate, optimize

from . import common
from .common import withTiming, Stats, ChartError, DecayError
from .clifford import cliffordMul, hermitian
from . import bubble

log = logging.getLogger("sylab.geometry")

ENABLE_PEP8 = True

Embedded = "EMBEDDED"
Metric = "METRIC"

FullGrid = "FULL_GRID"
AnsatzClosedForm = "ANSATZ_CLOSED_FORM"
AnsatzRadial = "ANSATZ_RADIAL"

TwoPi = 2.0 * math.pi


# ----------------------
#
# Charts
#
# ----------------------


class Harmonic(object):
    """offset + amplitude cos(x + phase), differentiable to any order

    Example:
        >>> sine = Harmonic(0.0, 1.0, -math.pi / 2)
        >>> round(float(sine(math.pi / 2)), 12)
        1.0
        >>> round(float(sine.derivative(0.0, 1)), 12)
        1.0

    """

    __slots__ = ("offset", "amplitude", "phase")

    def __init__(self, offset, amplitude, phase=0.0):
        self.offset = offset
        self.amplitude = amplitude
        self.phase = phase

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, order):
        wave = self.amplitude * np.cos(x + self.phase + order * math.pi / 2)
        return wave + self.offset if order == 0 else wave


Cos = Harmonic(0.0, 1.0)
Sin = Harmonic(0.0, 1.0, -math.pi / 2)
One = Harmonic(1.0, 0.0)


class SurfaceChart(object):
    """A rectangle of (s, t) with a Riemannian metric

    Subclasses provide `metric_jet`, the metric with its first and,
    optionally, second partial derivatives.

    """

    kind = None

    def __init__(self, domain, periodic):
        self.domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        self.periodic = tuple(bool(flag) for flag in periodic)

    def __repr__(self):
        return "%s()" % type(self).__name__

    def period(self, axis):
        lo, hi = self.domain[axis]
        return hi - lo

    def wrap(self, q):
        """Fold periodic coordinates of q (shape (..., 2)) into the domain"""
        q = np.array(q, dtype=float)
        for axis in (0, 1):
            if self.periodic[axis]:
                lo, _ = self.domain[axis]
                q[..., axis] = lo + np.mod(q[..., axis] - lo,
                                           self.period(axis))
        return q

    def difference(self, a, b):
        """a - b with periodic axes folded into (-period/2, period/2]"""
        delta = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for axis in (0, 1):
            if self.periodic[axis]:
                period = self.period(axis)
                delta[..., axis] -= period * np.round(delta[..., axis] /
                                                      period)
        return delta

    def inside(self, q):
        q = np.asarray(q)
        ok = np.ones(q.shape[:-1], dtype=bool)
        for axis in (0, 1):
            if not self.periodic[axis]:
                lo, hi = self.domain[axis]
                ok &= (q[..., axis] > lo) & (q[..., axis] < hi)
        return ok

    def samples(self, n):
        """n x n grid covering the chart, open at non-periodic ends

        n is rounded up to even so the midpoint of a non-periodic axis
        is sampled.

        """

        n += n % 2
        axes = []
        for axis in (0, 1):
            lo, hi = self.domain[axis]
            if self.periodic[axis]:
                axes.append(np.linspace(lo, hi, n, endpoint=False))
            else:
                axes.append(np.linspace(lo, hi, n + 1)[1:-1])
        return np.meshgrid(axes[0], axes[1], indexing="ij")

    def metricJet(self, s, t, order=2):
        raise NotImplementedError

    def metric(self, s, t):
        return self.metricJet(s, t, order=0)[0]

    def validate(self, n=16):
        """Check that g is symmetric positive definite on a sample grid"""
        S, T = self.samples(n)
        g = self.metric(S, T)
        if not np.allclose(g, np.swapaxes(g, -1, -2)):
            raise ChartError("%r has a non-symmetric metric" % self)

        smallest = np.linalg.eigvalsh(g).min()
        if not smallest > 1e-10:
            raise ChartError("%r has a singular metric, smallest eigenvalue "
                             "%.3g" % (self, smallest))
        return self

    if ENABLE_PEP8:
        metric_jet = metricJet


class EmbeddedChart(SurfaceChart):
    """Surface X(s, t) in R^3 with separable harmonic components

    Each coordinate of X is a product P(s) Q(t) of `Harmonic` factors, so
    every partial derivative is available in closed form.

    """

    kind = Embedded

    def __init__(self, components, domain, periodic):
        super(EmbeddedChart, self).__init__(domain, periodic)
        self.components = components

    def embed(self, s, t):
        return self.partial(s, t, 0, 0)

    def partial(self, s, t, m, n):
        """d^m/ds^m d^n/dt^n X, shape (..., 3)"""
        return np.stack([
            np.broadcast_to(P.derivative(s, m) * Q.derivative(t, n),
                            np.broadcast(s, t).shape)
            for P, Q in self.components
        ], axis=-1)

    def _partials(self, s, t):
        cache = {}

        def X(*axes):
            key = (axes.count(0), axes.count(1))
            if key not in cache:
                cache[key] = self.partial(s, t, *key)
            return cache[key]

        return X

    def metricJet(self, s, t, order=2):
        X = self._partials(s, t)
        shape = np.broadcast(s, t).shape

        def dot(a, b):
            return np.sum(a * b, axis=-1)

        g = np.empty(shape + (2, 2))
        dg = np.empty(shape + (2, 2, 2))
        ddg = np.empty(shape + (2, 2, 2, 2))

        for i in (0, 1):
            for j in (0, 1):
                g[..., i, j] = dot(X(i), X(j))

                if order < 1:
                    continue

                for k in (0, 1):
                    dg[..., k, i, j] = dot(X(i, k), X(j)) + dot(X(i), X(j, k))

                    if order < 2:
                        continue

                    for l in (0, 1):
                        ddg[..., l, k, i, j] = (
                            dot(X(i, k, l), X(j)) + dot(X(i, k), X(j, l)) +
                            dot(X(i, l), X(j, k)) + dot(X(i), X(j, k, l))
                        )

        return g, dg, ddg

    def normal(self, s, t):
        n = np.cross(self.partial(s, t, 1, 0), self.partial(s, t, 0, 1))
        return n / np.linalg.norm(n, axis=-1, keepdims=True)


class Ellipsoid(EmbeddedChart):
    """X = (a cos s cos t, b cos s sin t, c sin s), poles excluded"""

    def __init__(self, a, b, c):
        if min(a, b, c) <= 0:
            raise ChartError("Semi-axes must be positive, got %s" % (
                (a, b, c),))

        self.axes = (float(a), float(b), float(c))
        super(Ellipsoid, self).__init__(
            [(Harmonic(0.0, a), Cos),
             (Harmonic(0.0, b), Sin),
             (Harmonic(0.0, c, -math.pi / 2), One)],
            domain=((-math.pi / 2, math.pi / 2), (0.0, TwoPi)),
            periodic=(False, True),
        )

    def __repr__(self):
        return "Ellipsoid(%g, %g, %g)" % self.axes


class Sphere(Ellipsoid):
    """Round sphere of the given radius in latitude/longitude"""

    def __init__(self, radius=1.0):
        super(Sphere, self).__init__(radius, radius, radius)
        self.radius = float(radius)

    def __repr__(self):
        return "Sphere(%g)" % self.radius


class TorusOfRevolution(EmbeddedChart):
    """Tube angle s around the core circle, azimuth t"""

    def __init__(self, R0, r):
        if not 0 < r < R0:
            raise ChartError("Need 0 < r < R0, got r=%s, R0=%s" % (r, R0))

        self.R0 = float(R0)
        self.r = float(r)
        super(TorusOfRevolution, self).__init__(
            [(Harmonic(R0, r), Cos),
             (Harmonic(R0, r), Sin),
             (Harmonic(0.0, r, -math.pi / 2), One)],
            domain=((0.0, TwoPi), (0.0, TwoPi)),
            periodic=(True, True),
        )

    def __repr__(self):
        return "TorusOfRevolution(%g, %g)" % (self.R0, self.r)


class MetricChart(SurfaceChart):
    """Metric given as a function g(s, t) -> (..., 2, 2)

    Derivatives come from 4th-order central stencils with step h.

    """

    kind = Metric

    def __init__(self, g, domain, periodic, h=1e-2):
        super(MetricChart, self).__init__(domain, periodic)
        self.g = g
        self.h = h

    def _d(self, s, t, axis, f):
        h = self.h
        ds, dt = (h, 0.0) if axis == 0 else (0.0, h)
        return (-f(s + 2 * ds, t + 2 * dt) + 8 * f(s + ds, t + dt) -
                8 * f(s - ds, t - dt) + f(s - 2 * ds, t - 2 * dt)) / (12 * h)

    def _dd(self, s, t, axis, f):
        h = self.h
        ds, dt = (h, 0.0) if axis == 0 else (0.0, h)
        return (-f(s + 2 * ds, t + 2 * dt) + 16 * f(s + ds, t + dt) -
                30 * f(s, t) + 16 * f(s - ds, t - dt) -
                f(s - 2 * ds, t - 2 * dt)) / (12 * h * h)

    def metricJet(self, s, t, order=2):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(s, t).shape
        g = np.broadcast_to(self.g(s, t), shape + (2, 2))

        dg = np.empty(shape + (2, 2, 2))
        ddg = np.empty(shape + (2, 2, 2, 2))

        if order >= 1:
            for k in (0, 1):
                dg[..., k, :, :] = self._d(s, t, k, self.g)

        if order >= 2:
            for k in (0, 1):
                ddg[..., k, k, :, :] = self._dd(s, t, k, self.g)

            def along_t(s_, t_):
                return self._d(s_, t_, 1, self.g)

            mixed = self._d(s, t, 0, along_t)
            ddg[..., 0, 1, :, :] = mixed
            ddg[..., 1, 0, :, :] = mixed

        return g, dg, ddg

    @classmethod
    def fromTable(cls, s, t, g11, g12, g22, periodic=(False, False), h=None):
        """Metric sampled on a rectangular (s, t) grid

        Components are interpolated by quintic splines, so tables need at
        least six samples per axis.

        """

        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if len(s) < 6 or len(t) < 6:
            raise ChartError("Metric tables need >= 6 samples per axis")

        splines = [interpolate.RectBivariateSpline(s, t, np.asarray(c),
                                                   kx=5, ky=5)
                   for c in (g11, g12, g22)]

        def g(s_, t_):
            s_, t_ = np.broadcast_arrays(s_, t_)
            a, b, c = (spline.ev(s_, t_) for spline in splines)
            return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)

        step = h or 0.25 * min(s[1] - s[0], t[1] - t[0])
        return cls(g, ((s[0], s[-1]), (t[0], t[-1])), periodic, h=step)

    if ENABLE_PEP8:
        from_table = fromTable


class FlatTorus(MetricChart):
    """g = identity on [0, L1) x [0, L2)"""

    def __init__(self, L1=TwoPi, L2=TwoPi):
        def identity(s, t):
            shape = np.broadcast(s, t).shape
            return np.broadcast_to(np.eye(2), shape + (2, 2))

        super(FlatTorus, self).__init__(identity, ((0.0, L1), (0.0, L2)),
                                        (True, True))
        self.L = (float(L1), float(L2))

    def __repr__(self):
        return "FlatTorus(%g, %g)" % self.L


def loadChart(spec):
    """Chart from `name:params` text or a JSON file

    Example:
        >>> loadChart("torus:2,1")
        TorusOfRevolution(2, 1)
        >>> loadChart("flat")
        FlatTorus(6.28319, 6.28319)

    """

    if isinstance(spec, dict):
        data = spec
    elif spec.endswith(".json"):
        try:
            with open(spec) as f:
                data = json.load(f)
        except (IOError, ValueError) as e:
            raise ChartError("Could not read chart file %s: %s" % (spec, e))
    else:
        name, _, text = spec.partition(":")
        try:
            params = [float(value) for value in text.split(",") if value]
        except ValueError:
            raise ChartError("Bad chart parameters in %r" % spec)
        data = {"kind": name, "params": params}

    kind = data.get("kind", "").lower()
    params = data.get("params") or []

    builders = {
        "sphere": Sphere,
        "ellipsoid": Ellipsoid,
        "torus": TorusOfRevolution,
        "flat": FlatTorus,
    }

    try:
        if kind in builders:
            chart = builders[kind](*params)
        elif kind == "metric":
            table = data["table"]
            chart = MetricChart.fromTable(
                table["s"], table["t"],
                table["g11"], table["g12"], table["g22"],
                periodic=table.get("periodic", (False, False)),
            )
        else:
            raise ChartError("Unknown chart kind %r" % kind)

    except (TypeError, KeyError, ValueError) as e:
        raise ChartError("Invalid chart specification %r: %s" % (spec, e))

    return chart.validate()


# ----------------------
#
# Curvature
#
# ----------------------


def _christoffel(g, dg):
    ginv = np.linalg.inv(g)
    term = (dg + np.swapaxes(dg, -3, -2) -
            np.moveaxis(dg, -3, -1))
    return ginv, term, 0.5 * np.einsum("...kl,...ijl->...kij", ginv, term)


def christoffel(chart, s, t):
    """Gamma^k_ij at (s, t), shape (..., 2, 2, 2) indexed [k, i, j]"""
    g, dg, _ = chart.metricJet(s, t, order=1)
    return _christoffel(g, dg)[2]


def _riemann(g, dg, ddg):
    """Fully covariant R(d_i, d_j, d_k, d_l) and Christoffel symbols"""
    ginv, term, gamma = _christoffel(g, dg)

    # term[..., i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    dterm = (ddg + np.swapaxes(ddg, -3, -2) -
             np.moveaxis(ddg, -3, -1))
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", ginv, dg, ginv)
    dgamma = 0.5 * (np.einsum("...mkl,...ijl->...mkij", dginv, term) +
                    np.einsum("...kl,...mijl->...mkij", ginv, dterm))

    # R^l_ijk = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    first = np.einsum("...iljk->...lijk", dgamma)
    second = np.einsum("...jlik->...lijk", dgamma)
    quad = (np.einsum("...lim,...mjk->...lijk", gamma, gamma) -
            np.einsum("...ljm,...mik->...lijk", gamma, gamma))
    up = first - second + quad

    return np.einsum("...lm,...mijk->...ijkl", g, up), gamma


def gaussCurvature(chart, s, t):
    """K = R(d_s, d_t, d_t, d_s) / det g, vectorized over points"""
    g, dg, ddg = chart.metricJet(s, t, order=2)
    Rm, _ = _riemann(g, dg, ddg)
    return Rm[..., 0, 1, 1, 0] / np.linalg.det(g)


def orthonormalFrame(g):
    """Gram-Schmidt on (d_s, d_t); columns are e1, e2 in coordinates"""
    g11, g12, g22 = g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]
    n1 = np.sqrt(g11)
    n2 = np.sqrt(g22 - g12 ** 2 / g11)

    frame = np.zeros(g.shape)
    frame[..., 0, 0] = 1.0 / n1
    frame[..., 0, 1] = -g12 / (g11 * n2)
    frame[..., 1, 1] = 1.0 / n2
    return frame


class CurvatureData(object):
    """Curvature at one point, frame components in Gram-Schmidt order

    Example:
        >>> curv = curvature_at(Sphere(2.0), (0.3, 1.0))
        >>> round(curv.gauss, 12), round(curv.scal, 12)
        (0.25, 0.5)

    """

    def __init__(self, point, g, christoffel, coordinate_riemann, frame):
        self.point = tuple(float(x) for x in point)
        self.g = g
        self.christoffel = christoffel
        self.coordinate_riemann = coordinate_riemann
        self.frame = frame
        self.frame_riemann = np.einsum(
            "ijkl,ia,jb,kc,ld->abcd", coordinate_riemann,
            frame, frame, frame, frame,
        )

    def __repr__(self):
        return "CurvatureData(point=%r, K=%.6g)" % (self.point, self.gauss)

    @property
    def gauss(self):
        return float(self.frame_riemann[0, 1, 1, 0])

    @property
    def scal(self):
        R = self.frame_riemann
        return float(sum(R[j, i, i, j] for i in (0, 1) for j in (0, 1)))

    @property
    def ricci_matrix(self):
        """Ric_ab = sum_j R(e_j, e_a, e_b, e_j)"""
        return np.einsum("jabj->ab", self.frame_riemann)

    def riemann(self, x):
        """Matrix R(e_i, x, x, e_j) for x given in frame components

        x may carry trailing grid axes, shape (2, ...).

        """

        x = np.asarray(x, dtype=float)
        return np.einsum("iabj,a...,b...->ij...", self.frame_riemann, x, x)

    def ricci(self, x):
        """Ric(x, x) for x of shape (2, ...)"""
        x = np.asarray(x, dtype=float)
        return np.einsum("ab,a...,b...->...", self.ricci_matrix, x, x)


def curvatureAt(chart, q):
    # type: (SurfaceChart, tuple) -> CurvatureData
    """Curvature tensors of the chart at q = (s, t)

    Raises:
        ChartError: When the metric is singular at q or q lies outside

    """

    q = np.asarray(q, dtype=float)
    if not chart.inside(q):
        raise ChartError("%r is outside the domain of %r" % (tuple(q), chart))

    g, dg, ddg = chart.metricJet(q[0], q[1], order=2)

    eigenvalues = np.linalg.eigvalsh(g)
    if not eigenvalues.min() > 1e-10:
        raise ChartError("Singular metric at %r: eigenvalues %r" % (
            tuple(q), tuple(eigenvalues)))

    Rm, gamma = _riemann(g, dg, ddg)
    return CurvatureData(q, g, gamma, Rm, orthonormalFrame(g))


def gaussOracle(chart, q):
    """K from the first and second fundamental forms of an embedding"""
    if chart.kind != Embedded:
        raise ChartError("Fundamental forms need an embedded chart")

    s, t = q
    normal = chart.normal(s, t)
    Xs, Xt = chart.partial(s, t, 1, 0), chart.partial(s, t, 0, 1)
    L = chart.partial(s, t, 2, 0) @ normal
    M = chart.partial(s, t, 1, 1) @ normal
    N = chart.partial(s, t, 0, 2) @ normal
    E, F, G = Xs @ Xs, Xs @ Xt, Xt @ Xt
    return float((L * N - M * M) / (E * G - F * F))


def curvatureField(chart, n=64):
    """Gaussian curvature on an n x n sample grid as (S, T, K)"""
    S, T = chart.samples(n)
    return S, T, gaussCurvature(chart, S, T)


def saveCurvatureField(chart, path, n=64):
    S, T, K = curvatureField(chart, n)
    np.savetxt(path, np.column_stack([S.ravel(), T.ravel(), K.ravel()]),
               delimiter=",", header="s,t,K", comments="", fmt="%.17g")


# ----------------------
#
# Geodesics
#
# ----------------------


def _steps(chart, length):
    return max(32, int(math.ceil(400.0 * length)))


def _acceleration(chart, q, qdot):
    gamma = christoffel(chart, q[..., 0], q[..., 1])
    return -np.einsum("...kij,...i,...j->...k", gamma, qdot, qdot)


def _rk4(rhs, state, dt):
    k1 = rhs(state)
    k2 = rhs([a + 0.5 * dt * b for a, b in zip(state, k1)])
    k3 = rhs([a + 0.5 * dt * b for a, b in zip(state, k2)])
    k4 = rhs([a + dt * b for a, b in zip(state, k3)])
    return [a + dt / 6.0 * (b + 2 * c + 2 * d + e)
            for a, b, c, d, e in zip(state, k1, k2, k3, k4)]


@withTiming()
def geodesic(chart, y, x, n_steps=None, record=False):
    """Integrate the geodesic from y with frame velocity x up to time 1

    x may be a batch of shape (..., 2) sharing the base point y.

    Returns:
        Endpoints, or (times, positions, velocities) when `record` is set

    Raises:
        ChartError: When a path leaves a non-periodic side of the domain

    """

    Stats.ExpMapCount += 1

    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    g = chart.metric(y[0], y[1])
    frame = orthonormalFrame(g)

    qdot = np.einsum("ab,...b->...a", frame, x)
    q = np.broadcast_to(y, qdot.shape).copy()

    length = float(np.max(np.linalg.norm(x, axis=-1))) if x.size else 0.0
    n_steps = n_steps or _steps(chart, length)
    dt = 1.0 / n_steps

    def rhs(state):
        position, velocity = state
        return [velocity, _acceleration(chart, position, velocity)]

    history = [(q.copy(), qdot.copy())] if record else None
    state = [q, qdot]

    for _ in range(n_steps):
        state = _rk4(rhs, state, dt)

        if not np.all(chart.inside(state[0])):
            raise ChartError("Geodesic from %r leaves the domain of %r" % (
                tuple(y), chart))

        state[0] = chart.wrap(state[0])

        if record:
            history.append((state[0].copy(), state[1].copy()))

    if record:
        times = np.linspace(0.0, 1.0, n_steps + 1)
        positions = np.stack([h[0] for h in history])
        velocities = np.stack([h[1] for h in history])
        return times, positions, velocities

    return state[0]


def expMap(chart, y, x, n_steps=None):
    # type: (SurfaceChart, tuple, tuple) -> np.ndarray
    """exp_y(x) with x in the orthonormal frame at y

    Example:
        >>> point = exp_map(FlatTorus(), (1.0, 2.0), (0.5, -3.0))
        >>> [round(float(c), 9) for c in point]
        [1.5, 5.283185307]

    """

    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return chart.wrap(np.broadcast_to(np.asarray(y, dtype=float),
                                          x.shape))
    return geodesic(chart, y, x, n_steps=n_steps)


def speedDrift(chart, velocities, positions):
    """Relative spread of |qdot|_g along a recorded geodesic"""
    g = chart.metric(positions[..., 0], positions[..., 1])
    speed = np.sqrt(np.einsum("...i,...ij,...j->...", velocities, g,
                              velocities))
    return float((speed.max(axis=0) - speed.min(axis=0)).max() /
                 speed.max())


def normalMetric(chart, y, x, h=1e-3, n_steps=None):
    """Metric in normal coordinates at the frame vectors x, shape (..., 2)

    Jacobians of exp_y are central differences with step h and h/2
    combined by Richardson extrapolation.

    """

    x = np.asarray(x, dtype=float)
    length = float(np.max(np.linalg.norm(x, axis=-1))) + h
    n_steps = n_steps or _steps(chart, length)

    offsets = []
    for step in (h, 0.5 * h):
        for axis in (0, 1):
            e = np.zeros(2)
            e[axis] = step
            offsets.extend([e, -e])

    batch = np.stack([x] + [x + e for e in offsets])
    ends = geodesic(chart, y, batch, n_steps=n_steps)
    centre, shifted = ends[0], ends[1:]

    def jacobian(first):
        columns = []
        for axis in (0, 1):
            plus = shifted[first + 2 * axis]
            minus = shifted[first + 2 * axis + 1]
            step = h if first == 0 else 0.5 * h
            columns.append(chart.difference(plus, minus) / (2 * step))
        return np.stack(columns, axis=-1)

    J = (4.0 * jacobian(4) - jacobian(0)) / 3.0
    g = chart.metric(centre[..., 0], centre[..., 1])
    return np.einsum("...ia,...ij,...jb->...ab", J, g, J)


class ExpansionReport(object):
    """Remainder study of a normal-coordinate expansion"""

    def __init__(self, quantity, radii, remainders, fitted_order,
                 coefficient, expected, coeff_error):
        self.quantity = quantity
        self.radii = radii
        self.remainders = remainders
        self.fitted_order = fitted_order
        self.coefficient = coefficient
        self.expected = expected
        self.coeff_error = coeff_error

    def __repr__(self):
        return "ExpansionReport(%s, order=%s, coeff_error=%.3g)" % (
            self.quantity, self.fitted_order, self.coeff_error)

    def dump(self):
        return {
            "quantity": self.quantity,
            "radii": list(self.radii),
            "remainders": list(self.remainders),
            "fitted_order": self.fitted_order,
            "coefficient": self.coefficient,
            "expected": self.expected,
            "coeff_error": self.coeff_error,
        }


@withTiming()
def metricExpansionCheck(chart, y, radii=(0.4, 0.2, 0.1, 0.05),
                         direction=(1.0, 0.0), quantity="metric"):
    """Compare normal-coordinate metrics against their quadratic expansion

    For quantity "metric", g_ij(exp_y x) against
    delta_ij - R_y(e_i, x, x, e_j) / 3; for "volume", sqrt det g against
    1 - Ric_y(x, x) / 6. The quadratic coefficient is read off the
    component with the largest expected term and extrapolated to |x| = 0.

    Returns:
        ExpansionReport

    """

    if quantity not in ("metric", "volume"):
        raise ValueError("quantity must be 'metric' or 'volume'")

    curv = curvatureAt(chart, y)
    unit = np.asarray(direction, dtype=float)
    unit = unit / np.linalg.norm(unit)
    radii = np.asarray(sorted(radii, reverse=True), dtype=float)

    xs = radii[:, None] * unit
    G = normalMetric(chart, y, xs)

    if quantity == "metric":
        quadratic = -curv.riemann(unit) / 3.0
        index = np.unravel_index(np.argmax(np.abs(quadratic)), (2, 2))
        expected = float(quadratic[index])
        deviation = G - np.eye(2)
        predicted = radii[:, None, None] ** 2 * quadratic
        remainders = np.abs(deviation - predicted).max(axis=(1, 2))
        measured = deviation[(slice(None),) + index] / radii ** 2

    else:
        expected = -float(curv.ricci(unit)) / 6.0
        density = np.sqrt(np.linalg.det(G))
        remainders = np.abs(density - 1.0 - expected * radii ** 2)
        measured = (density - 1.0) / radii ** 2

    degree = min(2, len(radii) - 2)
    coefficient = float(np.polyfit(radii, measured, degree)[-1])

    if expected:
        coeff_error = abs(coefficient - expected) / abs(expected)
    else:
        coeff_error = abs(coefficient)

    fitted_order = None
    if np.all(remainders > 1e-11):
        fitted_order = float(np.polyfit(np.log(radii), np.log(remainders),
                                        1)[0])

    log.debug("%s expansion at %r: order %s, coefficient %.8g vs %.8g" % (
        quantity, tuple(y), fitted_order, coefficient, expected))

    return ExpansionReport(quantity, radii.tolist(), remainders.tolist(),
                           fitted_order, coefficient, expected, coeff_error)


def jacobiVolume(chart, y, thetas, step, count):
    """sqrt det g in normal coordinates along radial geodesics

    Solves J'' + K(gamma(t)) J = 0, J(0) = 0, J'(0) = 1 next to the unit
    speed geodesics gamma(t) = exp_y(t (cos theta, sin theta)) with fixed
    RK4 steps, and returns J(t) / t at t = step * (0 .. count - 1), shape
    (count, len(thetas)).

    """

    thetas = np.asarray(thetas, dtype=float)
    y = np.asarray(y, dtype=float)
    frame = orthonormalFrame(chart.metric(y[0], y[1]))

    units = np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)
    qdot = np.einsum("ab,...b->...a", frame, units)
    q = np.broadcast_to(y, qdot.shape).copy()
    J = np.zeros(len(thetas))
    dJ = np.ones(len(thetas))

    def rhs(state):
        position, velocity, jacobi, djacobi = state
        K = gaussCurvature(chart, position[..., 0], position[..., 1])
        return [velocity, _acceleration(chart, position, velocity),
                djacobi, -K * jacobi]

    density = np.ones((count, len(thetas)))
    state = [q, qdot, J, dJ]

    for index in range(1, count):
        state = _rk4(rhs, state, step)

        if not np.all(chart.inside(state[0])):
            raise ChartError("Radial geodesics from %r leave the domain of "
                             "%r" % (tuple(y), chart))

        state[0] = chart.wrap(state[0])
        density[index] = state[2] / (index * step)

    return density


@withTiming()
def volumeExpansionTest(chart, y, profile, eps_list, n_theta=32,
                        samples=801, cutoff=1e-18):
    """D_eps = [int F(|psi|) - eps^-2 int F(|psi(x/eps)|) sqrt det g] / eps^2

    The second integral is taken in normal coordinates at y, where
    substituting x = eps z turns D_eps into

        int F(rho(|z|)) (1 - sqrt det g(eps z)) dz / eps^2,

    which tends to (1/6) int Ric_y(z, z) F(rho) dz.

    Returns:
        List of rows {eps, D_eps, limit, rel_error}

    """

    p = profile.params.p
    weight = profile.rho ** p * profile.r ** 3
    keep = np.nonzero(weight > cutoff * weight.max())[0]
    r_end = profile.r[keep[-1]] if keep.size else profile.r[-1]

    r = np.linspace(0.0, r_end, samples)
    u, v, _, _ = profile.evaluate(r)
    F = common.primitive(np.hypot(u, v), p)

    thetas = np.linspace(0.0, TwoPi, n_theta, endpoint=False)
    units = np.stack([np.cos(thetas), np.sin(thetas)])

    curv = curvatureAt(chart, y)
    ricci = curv.ricci(units)
    limit = float(TwoPi * ricci.mean() / 6.0 *
                  integrate.simpson(F * r ** 3, x=r))

    rows = []
    for eps in eps_list:
        density = jacobiVolume(chart, y, thetas, eps * (r[1] - r[0]),
                                samples)
        deficit = (1.0 - density).mean(axis=1)
        value = float(TwoPi * integrate.simpson(F * deficit * r, x=r) /
                      eps ** 2)

        error = abs(value - limit) / abs(limit) if limit else abs(value)
        rows.append({
            "eps": float(eps),
            "D_eps": value,
            "limit": limit,
            "rel_error": error,
        })

        log.debug("D_eps(%g) = %.10g, limit %.10g" % (eps, value, limit))

    return rows


# ----------------------
#
# Theta
#
# ----------------------


class ThetaReport(object):
    """Value of Theta(y, psi) and its two summands"""

    def __init__(self, point, K, term_ricci, term_riemann, method,
                 ties=None, per_curvature=None):
        self.point = point
        self.K = K
        self.term_ricci = term_ricci
        self.term_riemann = term_riemann
        self.method = method
        self.ties = ties or []
        self.per_curvature = per_curvature

    def __repr__(self):
        return "ThetaReport(theta=%.10g, method=%s)" % (self.theta,
                                                        self.method)

    @property
    def theta(self):
        return self.term_ricci + self.term_riemann

    @property
    def tie(self):
        return len(self.ties) > 1

    def dump(self):
        return {
            "point": list(self.point) if self.point is not None else None,
            "K": self.K,
            "theta": self.theta,
            "term_ricci": self.term_ricci,
            "term_riemann": self.term_riemann,
            "method": self.method,
            "tie": self.tie,
            "ties": [list(point) for point in self.ties],
            "per_curvature": self.per_curvature,
        }


def thetaAnsatz(K, profile, angular=False):
    """Theta for ansatz bubbles from radial integrals

    The Ricci term is (pi K / 3)(1/2 - 1/p) int rho^p r^3 dr, which is
    pi K / 18 int rho^3 r^3 dr at p = 3. By default the Riemann term is
    taken to vanish; `angular` evaluates it instead as the radial integral

        (pi K / 6)(2 S + 1) int u v r^2 dr

    of the angular term, which the gridded `theta_full` reproduces.

    Example:
        >>> r = np.linspace(0, 30, 30001)
        >>> profile = bubble.RadialProfile(r, 0 * r, np.exp(-r),
        ...                                bubble.BubbleParams())
        >>> report = theta_ansatz(1.0, profile)
        >>> round(report.theta / (math.pi / 18 * 6 / 81), 8)
        1.0

    """

    p = profile.params.p
    moments = bubble.momentIntegrals(profile)
    term_ricci = math.pi * K / 3.0 * (0.5 - 1.0 / p) * moments["I_p2"]

    if not angular:
        return ThetaReport(None, K, term_ricci, 0.0, AnsatzClosedForm)

    S = profile.params.S
    overlap = bubble.radialMoment(profile, lambda r, u, v: u * v * r ** 2)
    term_riemann = math.pi * K / 6.0 * (2 * S + 1) * overlap
    return ThetaReport(None, K, term_ricci, term_riemann, AnsatzRadial)


def thetaFull(curv, field, tol_decay=1e-10):
    # type: (CurvatureData, bubble.SpinorField, float) -> ThetaReport
    """Theta by quadrature of a gridded spinor in normal coordinates

        term_ricci   = 1/6  int Ric(x, x) (f(|psi|)|psi|^2 / 2 - F(|psi|))
        term_riemann = 1/12 sum_ij Re int R(e_i, x, x, e_j)
                                          (d_j psi, e_i . psi)

    Raises:
        DecayError: When |psi| on the grid boundary exceeds tol_decay
            relative to its peak

    """

    level = field.boundaryLevel()
    if level > tol_decay:
        raise DecayError("Spinor is %.3g of its peak on the grid boundary, "
                         "need < %.3g" % (level, tol_decay))

    p = field.p
    X1, X2 = field.mesh()
    x = np.stack([X1, X2])
    modulus = field.modulus()

    density = (0.5 * common.nonlinearity(modulus, p) * modulus ** 2 -
               common.primitive(modulus, p))
    term_ricci = float(np.sum(curv.ricci(x) * density) * field.cell / 6.0)

    R = curv.riemann(x)
    total = 0.0
    for i, e in enumerate(((1.0, 0.0), (0.0, 1.0))):
        moved = cliffordMul(e, field.psi)
        for j in (0, 1):
            pairing = hermitian(field.dpsi[j], moved).real
            total += np.sum(R[i, j] * pairing)

    term_riemann = float(total * field.cell / 12.0)
    return ThetaReport(curv.point, curv.gauss, term_ricci, term_riemann,
                       FullGrid)


@withTiming()
def argmaxTheta(chart, profile, angular=False, n=64, tol=1e-9):
    """Concentration point maximizing Theta(y) = K(y) Theta_1

    Theta_1 is Theta at K = 1 for the profile; a negative Theta_1 turns
    the search into a minimization of K. A coarse grid scan is refined by
    Nelder-Mead on the chart.

    Returns:
        (point, ThetaReport) with grid points tying the scan maximum
        listed in `report.ties`

    """

    per_curvature = thetaAnsatz(1.0, profile, angular=angular).theta
    sign = 1.0 if per_curvature >= 0 else -1.0

    S, T = chart.samples(n)
    objective = sign * gaussCurvature(chart, S, T)
    best = objective.max()
    spread = best - objective.min()

    close = objective >= best - tol * max(1.0, abs(best))
    ties = [(float(s), float(t)) for s, t in zip(S[close], T[close])]
    start = np.unravel_index(np.argmax(objective), objective.shape)
    point = np.array([S[start], T[start]])

    if len(ties) > 1:
        log.info("%d grid points tie for the maximum on %r" % (
            len(ties), chart))

    if spread > tol * max(1.0, abs(best)):
        def negative(q):
            q = chart.wrap(q)
            if not chart.inside(q):
                return np.inf
            return -sign * float(gaussCurvature(chart, q[0], q[1]))

        result = optimize.minimize(
            negative, point, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000},
        )

        refined = chart.wrap(result.x)
        if chart.inside(refined) and -result.fun >= best:
            point = refined

    K = float(gaussCurvature(chart, point[0], point[1]))
    report = thetaAnsatz(K, profile, angular=angular)
    report.point = (float(point[0]), float(point[1]))
    report.ties = ties
    report.per_curvature = per_curvature

    return report.point, report


if ENABLE_PEP8:
    load_chart = loadChart
    gauss_curvature = gaussCurvature
    orthonormal_frame = orthonormalFrame
    curvature_at = curvatureAt
    gauss_oracle = gaussOracle
    curvature_field = curvatureField
    save_curvature_field = saveCurvatureField
    exp_map = expMap
    speed_drift = speedDrift
    normal_metric = normalMetric
    metric_expansion_check = metricExpansionCheck
    jacobi_volume = jacobiVolume
    volume_expansion_test = volumeExpansionTest
    theta_ansatz = thetaAnsatz
    theta_full = thetaFull
    argmax_theta = argmaxTheta
