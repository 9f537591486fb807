import os
import shutil
import tempfile
import contextlib
import functools

import numpy as np

from nose.tools import (
    assert_equal,
    assert_almost_equal,
    assert_less,
    assert_greater,
    assert_raises,
    assert_true,
)

from sylab import bubble
from sylab.bubble import BubbleParams, RadialProfile
from sylab.common import NoBracketError, NotConvergedError, DecayError


@contextlib.contextmanager
def tempdir():
    tmp = tempfile.mkdtemp()
    try:
        yield tmp
    finally:
        shutil.rmtree(tmp)


@contextlib.contextmanager
def patched(module, name, value):
    original = getattr(module, name)
    setattr(module, name, value)
    try:
        yield
    finally:
        setattr(module, name, original)


@functools.lru_cache(maxsize=None)
def ground(lam=1.0, p=3.0):
    return bubble.find_ground_state(BubbleParams(lam=lam, p=p))


def synthetic(rate=1.0, r_end=30.0, samples=30001, p=3.0):
    r = np.linspace(0.0, r_end, samples)
    return RadialProfile(r, 0 * r, np.exp(-rate * r), BubbleParams(p=p))


def relative(a, b):
    return abs(a - b) / abs(b)


def test_params_validation():
    """Exponent, mass and winding are validated"""
    assert_raises(ValueError, BubbleParams, p=5)
    assert_raises(ValueError, BubbleParams, p=2)
    assert_raises(ValueError, BubbleParams, lam=0)
    assert_raises(ValueError, BubbleParams, S=-1)
    assert_equal(BubbleParams(lam=4.0).r_max, 5.0)


def test_radial_rhs_zero():
    """The zero solution is stationary"""
    du, dv = bubble.radial_rhs(0.5, 0.0, 0.0, BubbleParams())
    assert_equal((du, dv), (0.0, 0.0))


def test_radial_rhs_rejects_origin():
    """r = 0 needs the origin series instead"""
    assert_raises(ValueError, bubble.radial_rhs, 0.0, 1.0, 1.0,
                  BubbleParams())


def test_radial_rhs_linear_tail():
    """Small amplitudes reduce to u' = -u/r + lam v, v' = lam u"""
    params = BubbleParams(lam=1.5)
    u, v, r = 1e-9, 2e-9, 3.0
    du, dv = bubble.radial_rhs(r, u, v, params)
    assert_almost_equal(du / (-u / r + 1.5 * v), 1.0, places=6)
    assert_almost_equal(dv / (1.5 * u), 1.0, places=6)


def test_origin_series_matches_rhs():
    """The series solves the system to leading order near r = 0"""
    params = BubbleParams()
    r = 1e-4
    u, v = bubble.origin_series(1.7, r, params)
    u2, v2 = bubble.origin_series(1.7, r * (1 + 1e-6), params)
    du, dv = bubble.radial_rhs(r, u, v, params)
    assert_almost_equal((u2 - u) / (r * 1e-6), du, delta=1e-5)
    assert_almost_equal((v2 - v) / (r * 1e-6), dv, delta=1e-5)


def test_shoot_trivial():
    """v0 = 0 gives the zero trajectory"""
    trajectory, kind = bubble.shoot(0.0, BubbleParams())
    assert_equal(kind, bubble.Decays)
    assert_true(np.all(trajectory(np.linspace(0.1, 5, 7)) == 0))


def test_shoot_rejects_negative():
    """Negative amplitudes are not shot"""
    assert_raises(ValueError, bubble.shoot, -1.0, BubbleParams())


def test_shoot_brackets():
    """Small v0 grows, large v0 crosses zero"""
    params = BubbleParams()
    assert_equal(bubble.shoot(1e-2, params)[1], bubble.UDominates)
    assert_equal(bubble.shoot(1e2, params)[1], bubble.VCrossesZero)


def test_shoot_trapped_near_constant_solution():
    """Shots at or below lam^(1/(p-2)) never fall towards zero"""
    params = BubbleParams()
    for v0 in (0.5, 0.9, 1.0):
        assert_equal(bubble.shoot(v0, params)[1], bubble.UDominates)


def test_shoot_classification_is_monotone():
    """Undershoots lie below overshoots on either side of v0*"""
    params = BubbleParams()
    kinds = [bubble.shoot(v0, params)[1] for v0 in (1.5, 2.0, 2.5)]
    assert_equal(kinds, [bubble.UDominates] * 3)
    kinds = [bubble.shoot(v0, params)[1] for v0 in (2.8, 4.0, 10.0)]
    assert_equal(kinds, [bubble.VCrossesZero] * 3)


def test_ode_solutions_solve_planar_equation():
    """Any trajectory of the radial system reconstructs a 2D solution"""
    params = BubbleParams(tol_ode=1e-12)
    trajectory, _ = bubble.shoot(1.3, params)
    r = np.linspace(0.0, min(trajectory.r_end, 4.0), 4001)
    u, v = trajectory(np.maximum(r, params.r0))
    u[0], v[0] = 0.0, 1.3
    profile = RadialProfile(r, u, v, params)
    assert_less(bubble.full_residual(profile).value, 1e-7)


def test_ground_state():
    """lam = 1, p = 3: positive, decaying, zero-node profile"""
    profile, report = ground()

    assert_greater(report.v0_star, 0.0)
    assert_greater(report.mu0, 0.0)
    assert_equal(profile.u[0], 0.0)
    assert_equal(profile.v[0], report.v0_star)
    assert_true(np.all(profile.v > 0))
    assert_less(abs(profile.u[1]), 0.1 * np.abs(profile.u).max())
    assert_less(report.residual_2d, 1e-6)
    assert_greater(report.decay_rate, 0.0)
    assert_less(report.decay_rate, 2.0)
    assert_almost_equal(report.mu0, bubble.energy(profile), places=14)


def test_ground_state_amplitude():
    """lam = 1, p = 3: v0* = 2.6531 and the profile is cut deep in the tail"""
    profile, report = ground()
    assert_almost_equal(report.v0_star, 2.6531, delta=1e-3)
    assert_less(profile.rho[-1] / report.v0_star, 1e-3)
    assert_greater(report.r_cut, 5.0)


def test_ground_state_tail_monotone():
    """rho decreases on the tail"""
    profile, _ = ground()
    tail = profile.rho[len(profile) // 2:]
    assert_true(np.all(np.diff(tail) < 0))


def test_collocation_oracle():
    """Shooting and collocation agree on mu0 and v0"""
    profile, report = ground()
    _, oracle = bubble.collocate(profile.params, guess=profile)
    assert_less(relative(oracle.mu0, report.mu0), 1e-6)
    assert_less(relative(oracle.v0_star, report.v0_star), 1e-6)


def test_scaling_law():
    """mu0(2) = 2 mu0(1) and profiles follow the scaling map"""
    profile1, report1 = ground(1.0)
    profile2, report2 = ground(2.0)
    assert_less(relative(report2.mu0, 2.0 * report1.mu0), 1e-6)
    assert_less(relative(report2.v0_star, 2.0 * report1.v0_star), 1e-6)

    scaled = bubble.rescale(profile1, 2.0)
    r = np.linspace(0.0, 5.0, 201)
    u1, v1, _, _ = scaled.evaluate(r)
    u2, v2, _, _ = profile2.evaluate(r)
    assert_less(np.abs(u1 - u2).max(), 1e-6 * report2.v0_star)
    assert_less(np.abs(v1 - v2).max(), 1e-6 * report2.v0_star)


def test_rescale_identity():
    """Rescaling to the same mass changes nothing"""
    profile, _ = ground()
    same = bubble.rescale(profile, 1.0)
    assert_true(np.array_equal(same.r, profile.r))
    assert_true(np.array_equal(same.v, profile.v))


def test_energy_zero_profile():
    """The zero profile has zero energy"""
    r = np.linspace(0, 10, 101)
    assert_equal(bubble.energy(RadialProfile(r, 0 * r, 0 * r,
                                             BubbleParams())), 0.0)


def test_energy_identity():
    """Phi from its definition equals int f|psi|^2/2 - F at the ground state"""
    profile, report = ground()
    phi = bubble.phi_functional(profile)
    assert_less(relative(phi, report.mu0), 1e-8)


def test_energy_p3_form():
    """p = 3: energy = (pi/3) int rho^3 r dr"""
    profile, report = ground()
    moments = bubble.moment_integrals(profile)
    assert_almost_equal(report.mu0, np.pi / 3 * moments["I_p0"], places=13)


def test_residual_zero_profile():
    """0/0 guard on the zero profile"""
    r = np.linspace(0, 10, 101)
    residual = bubble.full_residual(RadialProfile(r, 0 * r, 0 * r,
                                                  BubbleParams()))
    assert_equal(residual.value, 0.0)
    assert_true(residual.degenerate)


def test_residual_negative_control():
    """Swapping u and v breaks the equation"""
    profile, _ = ground()
    swapped = RadialProfile(profile.r, profile.v, profile.u, profile.params)
    assert_greater(bubble.full_residual(swapped).value, 0.1)


def test_decay_fit_synthetic():
    """rho = exp(-r) fits rate 1"""
    assert_almost_equal(bubble.decay_fit(synthetic()), 1.0, places=6)


def test_decay_rate_scales_with_mass():
    """Doubling lam doubles the fitted rate"""
    _, report1 = ground(1.0)
    _, report2 = ground(2.0)
    assert_almost_equal(report2.decay_rate / report1.decay_rate, 2.0,
                        delta=0.04)


def test_decay_fit_underflow():
    """An all-zero tail is reported"""
    r = np.linspace(0, 10, 101)
    v = np.where(r < 5, 1.0, 0.0)
    profile = RadialProfile(r, 0 * r, v, BubbleParams())
    assert_raises(DecayError, bubble.decay_fit, profile)


def test_moments_synthetic():
    """Gamma integrals for rho = exp(-r), p = 3"""
    moments = bubble.moment_integrals(synthetic())
    assert_less(relative(moments["I_p0"], 1.0 / 9.0), 1e-8)
    assert_less(relative(moments["I_p2"], 6.0 / 81.0), 1e-8)


def test_moments_tail_correction():
    """A truncated exponential recovers the full moments from its tail"""
    moments = bubble.moment_integrals(synthetic(r_end=4.0, samples=4001))
    assert_less(relative(moments["I_p0"], 1.0 / 9.0), 1e-8)
    assert_less(relative(moments["I_p2"], 6.0 / 81.0), 1e-8)


def test_moments_grid_halving():
    """Ground-state moments are stable under grid halving"""
    profile, _ = ground()
    coarse = RadialProfile(profile.r[::2], profile.u[::2], profile.v[::2],
                           profile.params)
    fine = bubble.moment_integrals(profile)
    half = bubble.moment_integrals(coarse)
    for key in ("I_p0", "I_p2"):
        assert_less(relative(half[key], fine[key]), 1e-3)


def test_no_bracket():
    """Classifications that never change are reported"""

    def grows(v0, params):
        return None, bubble.UDominates

    with patched(bubble, "shoot", grows):
        assert_raises(NoBracketError, bubble.find_ground_state,
                      BubbleParams())


def test_bisection_cap():
    """max_bisect exhausted before convergence"""
    assert_raises(NotConvergedError, bubble.find_ground_state,
                  BubbleParams(max_bisect=3))


def test_profile_files():
    """Profiles and reports survive a trip through files"""
    profile, report = ground()

    with tempdir() as tmp:
        path = os.path.join(tmp, "profile.csv")
        bubble.save_profile(profile, path)
        bubble.save_report(report, os.path.join(tmp, "report.json"))

        with open(path) as f:
            assert_equal(f.readlines()[1].strip(), "r,u,v")

        loaded = bubble.load_profile(path)

    assert_equal(loaded.params.lam, 1.0)
    assert_equal(loaded.params.S, 0)
    assert_true(np.array_equal(loaded.u, profile.u))
    assert_equal(bubble.energy(loaded), report.mu0)


def test_winding_comparison():
    """Energies are reported per winding"""
    energies = bubble.winding_comparison(BubbleParams(), windings=(0, 1))
    _, report = ground()
    assert_almost_equal(energies[0], report.mu0, places=12)
    assert_true(energies[1] is None or energies[1] > 0)


def test_spinor_field_matches_profile():
    """Gridded reconstruction carries |psi| = rho"""
    profile, _ = ground()
    field = bubble.spinor_field(profile, half_width=4.0, spacing=0.1)
    X1, X2 = field.mesh()
    u, v, _, _ = profile.evaluate(np.hypot(X1, X2))
    assert_less(np.abs(field.modulus() - np.hypot(u, v)).max(), 1e-12)


def test_spinor_field_spectral_derivatives():
    """Spectral derivatives of a decaying field match the analytic ones"""
    profile, _ = ground()
    field = bubble.spinor_field(profile, half_width=20.0, spacing=0.1)
    spectral = bubble.SpinorField.from_values(field.x1, field.x2, field.psi,
                                              field.p)
    assert_less(np.abs(spectral.dpsi - field.dpsi).max(), 1e-6)
