import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from udwharvest.errors import FaddeevaOverflow, OnLightCone, UnsupportedDimension, UnsupportedOrder
from udwharvest.kernels import (
    KERNEL_CONSTANTS,
    GaussianProfile,
    angular_factor,
    bessel_j0,
    faddeeva,
    smeared_delta_derivative,
    smeared_w2,
    smeared_w2_dtdt,
    spectral_density,
    sphere_area,
    w_minus,
    w_minus_dtdt,
)
from udwharvest.quad import QuadratureSpec, integrate

from conftest import make_config

FINE = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-11)


def _w_mpmath(z):
    with mp.workdps(50):
        return mp.exp(-z ** 2) * mp.erfc(-1j * z)


def test_faddeeva_at_i_is_e_erfc1():
    # Taylor series oracle for erfc(1): 1 - (2/sqrt(pi)) sum (-1)^n / (n! (2n+1))
    erf1 = 2 / math.sqrt(math.pi) * sum((-1) ** n / (math.factorial(n) * (2 * n + 1)) for n in range(30))
    assert faddeeva(1j) == pytest.approx(math.e * (1 - erf1), rel=1e-14)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(-30, 30), y=st.floats(-5, 30))
def test_faddeeva_against_mpmath(x, y):
    ref = complex(_w_mpmath(mp.mpc(x, y)))
    assert abs(faddeeva(complex(x, y)) - ref) <= 1e-13 * abs(ref) + 1e-300


def test_faddeeva_overflow():
    with pytest.raises(FaddeevaOverflow):
        faddeeva(complex(0.0, -40.0))


def test_bessel_first_zero_from_power_series():
    def series(x):
        return sum((-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2 for m in range(40))

    zero = 2.404825557695773
    assert abs(series(zero)) < 1e-15
    assert abs(bessel_j0(zero)) < 1e-15
    assert bessel_j0(1.3) == pytest.approx(series(1.3), rel=1e-14)


def test_angular_factors_and_sphere_areas():
    u = np.array([0.0, 0.7, 3.0])
    assert np.allclose(angular_factor(1, u), np.cos(u))
    assert np.allclose(angular_factor(2, u), [float(mp.besselj(0, v)) for v in u])
    assert np.allclose(angular_factor(3, u), [1.0, math.sin(0.7) / 0.7, math.sin(3.0) / 3.0])
    assert [sphere_area(n) for n in (1, 2, 3)] == [2.0, 2 * math.pi, 4 * math.pi]
    with pytest.raises(UnsupportedDimension):
        sphere_area(4)


def test_kernel_constant_a0():
    assert KERNEL_CONSTANTS.a(3) == pytest.approx(1 / (8 * math.pi), rel=1e-15)


@pytest.mark.parametrize("j", range(5))
def test_smeared_delta_derivative_matches_gaussian_derivatives(j):
    g = GaussianProfile(0.4, 0.7, 1.3)
    c = 1.1
    ref = (-1) ** j * mp.diff(lambda x: 1.3 * mp.npdf(x, 0.4, 0.7), c, j)
    assert smeared_delta_derivative(j, c, g) == pytest.approx(float(ref), rel=1e-12)


def test_unsupported_delta_order():
    with pytest.raises(UnsupportedOrder):
        smeared_delta_derivative(5, 0.0, GaussianProfile(0, 1))


def test_w1_pointwise_plateau():
    assert w_minus(1, 2.0, 1.0).plateau == -0.25j
    assert w_minus(1, -2.0, 1.0).plateau == 0.25j
    assert w_minus(1, 0.5, 1.0).plateau == 0


def _momentum_smear(n, r, g, derivative=False):
    """Momentum-space form of the smeared commutator kernel, an independent route."""
    p = 1 if derivative else 0
    pref = -1j * sphere_area(n) / (2 * (2 * math.pi) ** n)

    def f(k):
        return k ** (n - 1) * k ** (2 * p - 1) * angular_factor(n, k * r) * g.sine_transform(k)

    val, _ = integrate(f, 0.0, 60.0 / g.width, FINE, period=2 * math.pi / max(r, g.center, 1))
    return pref * val


@pytest.mark.parametrize("n", [1, 3])
@pytest.mark.parametrize("derivative", [False, True])
@pytest.mark.parametrize("centre,r", [(2.0, 1.5), (-1.0, 1.2), (0.3, 2.0)])
def test_distributional_kernels_against_momentum_form(n, derivative, centre, r):
    g = GaussianProfile(centre, 0.4)
    kernel = (w_minus_dtdt if derivative else w_minus)(n, 0.0, r)
    assert kernel.smear(g) == pytest.approx(_momentum_smear(n, r, g, derivative), abs=1e-12)


def test_n2_kernels_against_momentum_form():
    g = GaussianProfile(2.5, 0.3)
    assert smeared_w2(1.0, g, FINE)[0] == pytest.approx(_momentum_smear(2, 1.0, g), abs=1e-12)
    assert smeared_w2_dtdt(1.0, g, FINE)[0] == pytest.approx(
        _momentum_smear(2, 1.0, g, True), abs=1e-11)


def test_n2_pointwise_matches_smeared_inside_cone():
    # a profile well inside the future cone sees only the pointwise kernel
    g = GaussianProfile(3.0, 0.15)
    direct, _ = integrate(lambda t: np.array([w_minus_dtdt(2, x, 1.0) for x in t]) * g(t),
                          1.6, 6.0, FINE)
    assert smeared_w2_dtdt(1.0, g, FINE)[0] == pytest.approx(direct, rel=1e-8)


def test_n2_pointwise_values():
    assert w_minus(2, 2.0, 0.0) == pytest.approx(-1j / (8 * math.pi))
    assert w_minus(2, 0.5, 1.0) == 0
    assert w_minus(2, -2.0, 1.0) == -w_minus(2, 2.0, 1.0)
    with pytest.raises(OnLightCone):
        w_minus(2, 1.0, 1.0)
    with pytest.raises(OnLightCone):
        w_minus_dtdt(2, -1.0 - 1e-9, 1.0)


def _mixed_difference(dt, r, h=1e-4):
    # d_t d_t' f(t - t') with steps h in t and t'
    f = lambda x: w_minus(2, x, r)
    return (f(dt) - f(dt + 2 * h) - f(dt - 2 * h) + f(dt)) / (4 * h * h)


@pytest.mark.parametrize("i", range(10))
def test_w2_derivative_kernel_finite_difference(i):
    rng = np.random.default_rng(100 + i)
    r = rng.uniform(0.0, 3.0)
    dt = rng.choice([-1, 1]) * (r + rng.uniform(0.5, 3.0))
    exact = w_minus_dtdt(2, dt, r)
    assert abs(_mixed_difference(dt, r) - exact) <= 1e-4 * abs(exact)


def test_n3_kernel_singular_at_coincidence():
    with pytest.raises(OnLightCone):
        w_minus(3, 1.0, 0.0)


def test_smear_abs_against_direct_quadrature():
    g = GaussianProfile(0.0, 1.0, math.sqrt(2 * math.pi))
    shift, r = 1.7, 0.9
    kernel = w_minus(1, 0.0, r)

    def pointwise(u):
        tau = np.abs(u - shift)
        return -0.25j * (np.heaviside(r + tau, 0.5) - np.heaviside(r - tau, 0.5)) * g(u)

    direct, _ = integrate(pointwise, -12.0, 12.0, FINE, breakpoints=[shift - r, shift, shift + r])
    assert kernel.smear_abs(g, shift) == pytest.approx(direct, abs=1e-13)


def test_mirror_antisymmetry():
    g = GaussianProfile(1.3, 0.5)
    for n in (1, 3):
        k = w_minus_dtdt(n, 0.0, 1.0)
        assert k.smear(g.mirrored()) == pytest.approx(-k.smear(g), abs=1e-15)


def test_spectral_density_modes():
    c = make_config("derivative_3d", separation=0.0)
    k = np.linspace(0.1, 5.0, 7)
    assert np.allclose(spectral_density(c, k, "L"), spectral_density(c, k, "M"))
    c1 = make_config("amplitude_1d")
    assert spectral_density(c1, 2.0, "L") == pytest.approx(
        2 / (2 * 2 * math.pi) / 2.0 * math.exp(-0.5 * (2.0 * 0.05) ** 2))
    with pytest.raises(ValueError):
        spectral_density(c, k, "X")


def test_faddeeva_simple_values_and_asymptote():
    assert faddeeva(0j) == 1
    z = 400.0
    assert faddeeva(z) == pytest.approx(1j / (math.sqrt(math.pi) * z), rel=1e-5)


def test_bessel_zero_by_bisection_and_evenness():
    def series(x):
        return sum((-1) ** m * (x / 2) ** (2 * m) / math.factorial(m) ** 2 for m in range(40))

    lo, hi = 2.0, 3.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if series(mid) > 0 else (lo, mid)
    assert lo == pytest.approx(2.404825557695773, abs=1e-14)
    assert abs(bessel_j0(lo)) < 1e-12
    x = np.linspace(0.0, 20.0, 11)
    assert np.array_equal(bessel_j0(-x), bessel_j0(x))
    assert bessel_j0(0.0) == 1.0


def test_gaussian_profile_normalization():
    g = GaussianProfile(0.3, 0.25, 2.5)
    val, _ = integrate(g, -8.0, 8.0, FINE)
    assert val.real == pytest.approx(2.5, abs=1e-10)
    with pytest.raises(ValueError):
        GaussianProfile(0.0, 0.0)


def test_delta_derivative_examples():
    s = 0.6
    g = GaussianProfile(1.0, s)
    assert smeared_delta_derivative(0, 1.4, g) == pytest.approx(g(1.4))
    assert smeared_delta_derivative(2, 1.0, g) == pytest.approx(-1 / (s ** 3 * math.sqrt(2 * math.pi)))


def test_n2_derivative_kernel_examples():
    v = w_minus_dtdt(2, 2.0, 1.0)
    assert v == pytest.approx(1j * 9 / (4 * math.pi * 3 ** 2.5), rel=1e-15)
    assert w_minus_dtdt(2, -2.0, 1.0) == -v
    assert w_minus_dtdt(2, 0.5, 1.0) == 0


def test_n1_derivative_kernel_terms():
    k = w_minus_dtdt(1, 0.0, 1.5)
    assert sorted((t.support, t.coefficient, t.order) for t in k.terms) == [
        (-1.5, 0.25j, 1), (1.5, 0.25j, 1)]


@settings(max_examples=40, deadline=None)
@given(centre=st.floats(-6, 6), width=st.floats(0.05, 2.0), r=st.floats(0.01, 5.0))
def test_smeared_kernels_antisymmetric_and_imaginary(centre, width, r):
    g = GaussianProfile(centre, width)
    for n in (1, 3):
        for build in (w_minus, w_minus_dtdt):
            k = build(n, 0.0, r)
            v = k.smear(g)
            assert abs(v.real) <= 1e-12 * max(1.0, abs(v))
            assert k.smear(g.mirrored()) == pytest.approx(-v, abs=1e-12 * max(1.0, abs(v)))


@pytest.mark.parametrize("i", range(5))
def test_a0_consistency_at_random_points(i):
    rng = np.random.default_rng(500 + i)
    g = GaussianProfile(rng.uniform(-4, 4), rng.uniform(0.2, 0.8))
    r = rng.uniform(0.2, 4.0)
    got = w_minus_dtdt(3, 0.0, r).smear(g)
    ref = _momentum_smear(3, r, g, derivative=True)
    assert abs(got - ref) <= 1e-6 * abs(ref) + 1e-14


def test_spectral_density_infrared_behaviour():
    k = np.array([1e-6, 1e-4])
    d3 = spectral_density(make_config("derivative_3d"), k, "L")
    assert d3[0] / d3[1] == pytest.approx(1e-6, rel=1e-6)  # ~ k^3
    a1 = spectral_density(make_config("amplitude_1d"), k, "L")
    assert a1[0] / a1[1] == pytest.approx(100.0, rel=1e-6)  # ~ 1/k
